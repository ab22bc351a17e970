use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// How firing rates are read out of spike trains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateEstimator {
    /// Spikes in `(t0, t]` divided by `t − t0`.
    Cumulative { t0: f64 },
    /// Spikes in `(t − width, t]` divided by `min(width, t)`.
    Window { width: f64 },
    /// Exponentially weighted count with time constant `tau`, normalized by
    /// the total weight seen so far so early estimates are not biased low.
    Ema { tau: f64 },
}

impl RateEstimator {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RateEstimator::Cumulative { t0 } => t0 >= 0.0 && t0.is_finite(),
            RateEstimator::Window { width } => width > 0.0 && width.is_finite(),
            RateEstimator::Ema { tau } => tau > 0.0 && tau.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid rate estimator {self:?}")))
        }
    }
}

/// Rates at time `t` from per-neuron spike times.
pub fn estimate_rates(spike_log: &[Vec<f64>], t: f64, estimator: RateEstimator) -> Result<Vec<f64>> {
    estimator.validate()?;
    match estimator {
        RateEstimator::Cumulative { t0 } => {
            if !(t > t0) {
                return Err(Error::InvalidParameter(format!(
                    "cumulative rate needs t > t0, got t = {t}, t0 = {t0}"
                )));
            }
            Ok(spike_log
                .iter()
                .map(|s| s.iter().filter(|&&x| x > t0 && x <= t).count() as f64 / (t - t0))
                .collect())
        }
        RateEstimator::Window { width } => {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("window rate needs t > 0, got {t}")));
            }
            let span = width.min(t);
            Ok(spike_log
                .iter()
                .map(|s| s.iter().filter(|&&x| x > t - width && x <= t).count() as f64 / span)
                .collect())
        }
        RateEstimator::Ema { tau } => {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("ema rate needs t > 0, got {t}")));
            }
            let norm = -tau * (-t / tau).exp_m1();
            Ok(spike_log
                .iter()
                .map(|s| {
                    s.iter()
                        .filter(|&&x| x <= t)
                        .map(|&x| (-(t - x) / tau).exp())
                        .sum::<f64>()
                        / norm
                })
                .collect())
        }
    }
}

/// Incremental version of [`estimate_rates`] on the engine clock, which
/// also maintains the coupling product `W · raw` so each step costs O(N)
/// plus O(N) per spike.
#[derive(Debug, Clone)]
pub(crate) struct RateTracker {
    kind: RateEstimator,
    dt: f64,
    /// EMA decay per step.
    beta: f64,
    /// EMA: decayed counts; cumulative: counts since origin; window: counts
    /// in the window.
    raw: Vec<f64>,
    coupled: Vec<f64>,
    /// EMA normalizer, the decayed sum of step lengths.
    weight: f64,
    origin: f64,
    queue: VecDeque<(f64, usize)>,
}

impl RateTracker {
    pub fn new(kind: RateEstimator, n: usize, dt: f64) -> Self {
        let beta = match kind {
            RateEstimator::Ema { tau } => (-dt / tau).exp(),
            _ => 1.0,
        };
        Self {
            kind,
            dt,
            beta,
            raw: vec![0.0; n],
            coupled: vec![0.0; n],
            weight: 0.0,
            origin: 0.0,
            queue: VecDeque::new(),
        }
    }

    /// Factor turning raw counts into rates at time `t`.
    pub fn scale(&self, t: f64) -> f64 {
        let span = match self.kind {
            RateEstimator::Ema { .. } => self.weight,
            RateEstimator::Cumulative { .. } => t - self.origin,
            RateEstimator::Window { width } => width.min(t),
        };
        if span > 0.0 {
            1.0 / span
        } else {
            0.0
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn coupled(&self) -> &[f64] {
        &self.coupled
    }

    /// Advances the clock from `t` to `t + dt` and registers the spikes
    /// emitted at `t + dt`.
    pub fn advance(&mut self, t: f64, spikes: &[usize], w: &DenseMatrix) {
        let t_new = t + self.dt;
        match self.kind {
            RateEstimator::Ema { .. } => {
                let beta = self.beta;
                self.raw.iter_mut().for_each(|x| *x *= beta);
                self.coupled.iter_mut().for_each(|x| *x *= beta);
                self.weight = beta * self.weight + self.dt;
            }
            RateEstimator::Cumulative { t0 } => {
                if t < t0 && t_new >= t0 {
                    self.origin = t0;
                    self.raw.iter_mut().for_each(|x| *x = 0.0);
                    self.coupled.iter_mut().for_each(|x| *x = 0.0);
                }
            }
            RateEstimator::Window { width } => {
                while let Some(&(ts, j)) = self.queue.front() {
                    if ts > t_new - width {
                        break;
                    }
                    self.queue.pop_front();
                    self.raw[j] -= 1.0;
                    axpy_row(-1.0, w, j, &mut self.coupled);
                }
            }
        }
        for &j in spikes {
            self.raw[j] += 1.0;
            axpy_row(1.0, w, j, &mut self.coupled);
            if let RateEstimator::Window { width } = self.kind {
                if width > self.dt * 0.5 {
                    self.queue.push_back((t_new, j));
                } else {
                    // window shorter than a step: the spike expires at once
                    self.raw[j] -= 1.0;
                    axpy_row(-1.0, w, j, &mut self.coupled);
                }
            }
        }
    }

    /// Recomputes the coupling product from the raw counts to shed
    /// accumulated rounding.
    pub fn refresh(&mut self, w: &DenseMatrix) {
        self.coupled = w.mul_vec(&self.raw).expect("square coupling matrix");
    }
}

/// `y += alpha · W[j, :]` (W is symmetric, so this is column `j`).
fn axpy_row(alpha: f64, w: &DenseMatrix, j: usize, y: &mut [f64]) {
    for (yi, &wj) in y.iter_mut().zip(w.row(j)) {
        *yi += alpha * wj;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn standalone_examples() {
        let log = vec![vec![1.0, 2.0, 3.0], vec![]];
        let r = estimate_rates(&log, 4.0, RateEstimator::Cumulative { t0: 0.0 }).unwrap();
        assert_eq!(r, vec![0.75, 0.0]);
        assert!(estimate_rates(&log, 0.0, RateEstimator::Cumulative { t0: 0.0 }).is_err());
        let w = estimate_rates(&log, 4.0, RateEstimator::Window { width: 2.0 }).unwrap();
        assert_eq!(w[0], 0.5);
    }

    #[test]
    fn ema_tends_to_cumulative_for_long_time_constants() {
        let train: Vec<f64> = (1..=40).map(|k| k as f64 * 0.25).collect();
        let log = vec![train];
        let cum = estimate_rates(&log, 10.0, RateEstimator::Cumulative { t0: 0.0 }).unwrap()[0];
        let mut last = f64::INFINITY;
        for tau in [10.0, 100.0, 1e4, 1e6] {
            let ema = estimate_rates(&log, 10.0, RateEstimator::Ema { tau }).unwrap()[0];
            let gap = (ema - cum).abs();
            assert!(gap <= last);
            last = gap;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn tracker_matches_standalone_estimates() {
        let dt = 0.01;
        let w = DenseMatrix::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        for kind in [
            RateEstimator::Cumulative { t0: 0.3 },
            RateEstimator::Window { width: 0.5 },
            RateEstimator::Ema { tau: 0.4 },
        ] {
            let mut tracker = RateTracker::new(kind, 2, dt);
            let mut log = vec![Vec::new(), Vec::new()];
            let mut t = 0.0;
            for step in 0..200 {
                let mut spikes = Vec::new();
                if step % 7 == 3 {
                    spikes.push(0);
                }
                if step % 11 == 5 {
                    spikes.push(1);
                }
                tracker.advance(t, &spikes, &w);
                t = (step + 1) as f64 * dt;
                for &j in &spikes {
                    log[j].push(t);
                }
            }
            let exact = estimate_rates(&log, t, kind).unwrap();
            let scale = tracker.scale(t);
            for i in 0..2 {
                // the tracker's EMA is the step-discretized version
                let tol = if matches!(kind, RateEstimator::Ema { .. }) { 0.05 * exact[i] } else { 1e-9 };
                assert_abs_diff_eq!(tracker.raw()[i] * scale, exact[i], epsilon = tol);
            }
            let coupled = w.mul_vec(tracker.raw()).unwrap();
            for i in 0..2 {
                assert_abs_diff_eq!(tracker.coupled()[i], coupled[i], epsilon = 1e-12);
            }
        }
    }
}
