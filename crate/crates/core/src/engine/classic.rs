//! Event-driven spiking LCA with perfect integrate-and-fire neurons.
//!
//! Between spikes every synaptic current relaxes as
//! `μ(t + s) = b + (μ(t) − b) e^{−s}` and every membrane integrates
//! `μ − λ`, so the next spike time of each neuron solves a scalar equation
//! exactly. A spike of `j` resets its membrane to zero and lowers every
//! `μ_i` by `w_ij`. Rates are spike counts over `t − t0`.

use crate::error::{Error, Result};
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;
use crate::trace::{Sample, SolveTrace};

use super::{EngineConfig, Network, RateEstimator};

const THRESHOLD: f64 = 1.0;
const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Unit {
    drive: f64,
    leak: f64,
    mu: f64,
    v: f64,
}

impl Unit {
    fn potential(&self, s: f64) -> f64 {
        self.v + (self.drive - self.leak) * s - (self.mu - self.drive) * (-s).exp_m1()
    }

    fn slope(&self, s: f64) -> f64 {
        self.drive - self.leak + (self.mu - self.drive) * (-s).exp()
    }

    /// Integral of `μ` over the next `s` time units.
    fn current_integral(&self, s: f64) -> f64 {
        self.drive * s - (self.mu - self.drive) * (-s).exp_m1()
    }

    fn advance(&mut self, s: f64) {
        self.v = self.potential(s);
        self.mu = self.drive + (self.mu - self.drive) * (-s).exp();
    }

    /// Earliest `s` in `(0, horizon]` at which the membrane reaches
    /// threshold, if any. The potential is convex or concave in `s`, so it
    /// rises monotonically on the bracket searched.
    fn next_spike(&self, horizon: f64) -> Option<f64> {
        if self.v >= THRESHOLD {
            return Some(0.0);
        }
        // turning point of the potential, where the slope vanishes
        let net = self.drive - self.leak;
        let gap = self.mu - self.drive;
        let ratio = -net / gap;
        let turn = if gap != 0.0 && ratio > 0.0 {
            (-ratio.ln()).max(0.0)
        } else {
            f64::INFINITY
        };
        let (lo, hi) = if gap > 0.0 {
            // rises until the turning point, then falls
            if self.slope(0.0) <= 0.0 {
                return None;
            }
            (0.0, turn.min(horizon))
        } else {
            // falls until the turning point, then rises
            (if turn.is_finite() { turn.min(horizon) } else { 0.0 }, horizon)
        };
        if self.potential(hi) < THRESHOLD {
            return None;
        }
        let (mut lo, mut hi) = (lo, hi);
        while hi - lo > TIME_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.potential(mid) >= THRESHOLD {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Classic spiking LCA for non-negative L1 problems. Uses the horizon,
/// sampling and cumulative `t0` of `cfg`; neuron model, gain and injection
/// settings do not apply.
pub fn solve_classic(problem: &SensingProblem, cfg: &EngineConfig) -> Result<SolveTrace> {
    if problem.sign_mode() != SignMode::Nonneg {
        return Err(Error::Unsupported(
            "the classic solver needs a non-negative problem".into(),
        ));
    }
    if problem.penalty() != Penalty::L1 {
        return Err(Error::Unsupported(format!(
            "the classic solver implements the L1 penalty only, got {}",
            problem.penalty().name()
        )));
    }
    let t0 = match cfg.rate_estimator {
        RateEstimator::Cumulative { t0 } if t0 >= 0.0 => t0,
        other => {
            return Err(Error::Unsupported(format!(
                "the classic solver decodes cumulative rates only, got {other:?}"
            )))
        }
    };
    if !(cfg.t_max > t0) || !cfg.t_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_max must exceed t0, got t_max = {}, t0 = {t0}",
            cfg.t_max
        )));
    }

    let net = Network::new(problem);
    let n = net.n();
    let mut units: Vec<Unit> = (0..n)
        .map(|i| {
            let d = net.scale[i];
            Unit {
                drive: net.drive[i],
                leak: if d > 0.0 { net.lambda / d } else { f64::INFINITY },
                mu: net.drive[i],
                v: 0.0,
            }
        })
        .collect();
    let enabled: Vec<bool> = (0..n).map(|i| net.enabled(i)).collect();

    let sample_every = cfg.sample_every.unwrap_or(cfg.t_max / 200.0);
    if !(sample_every > 0.0) {
        return Err(Error::InvalidParameter("sample_every must be > 0".into()));
    }
    let mut counts = vec![0u64; n];
    let mut since_origin = vec![0u64; n];
    let mut mu_integral = vec![0.0; n];
    let mut spike_log = cfg.keep_spike_log.then(|| vec![Vec::new(); n]);
    let mut trace = SolveTrace::new("slca-classic");
    let mut max_abs_mu = units.iter().fold(0.0f64, |m, u| m.max(u.mu.abs()));

    let rates = |since: &[u64], t: f64| -> Vec<f64> {
        if t > t0 {
            since.iter().map(|&c| c as f64 / (t - t0)).collect()
        } else {
            vec![0.0; since.len()]
        }
    };
    let record = |trace: &mut SolveTrace, t: f64, x: &[f64], counts: &[u64]| -> Result<()> {
        let coeffs = net.decode(x);
        let objective = problem.objective(&coeffs)?;
        trace.push(Sample {
            time: t,
            objective,
            coeffs,
            spikes: Some(counts.to_vec()),
        })
    };
    record(&mut trace, 0.0, &vec![0.0; n], &counts)?;

    let mut t = 0.0;
    let mut sample_index = 1u64;
    let mut firing: Vec<usize> = Vec::new();
    loop {
        let next_sample = (sample_index as f64 * sample_every).min(cfg.t_max);
        // the origin is a breakpoint so the counts split exactly there
        let stop = if t < t0 { next_sample.min(t0) } else { next_sample };
        let horizon = stop - t;

        let mut best = horizon;
        firing.clear();
        for i in 0..n {
            if !enabled[i] {
                continue;
            }
            if let Some(s) = units[i].next_spike(best) {
                if s < best - TIME_TOL * best.max(1.0) {
                    best = s;
                    firing.clear();
                }
                firing.push(i);
            }
        }
        // drop candidates found before a strictly earlier spike was seen
        firing.retain(|&i| units[i].potential(best) >= THRESHOLD - 1e-9);

        for i in 0..n {
            if enabled[i] {
                if t >= t0 {
                    mu_integral[i] += units[i].current_integral(best);
                }
                units[i].advance(best);
            }
        }
        t += best;
        if (stop - t).abs() <= TIME_TOL * stop.max(1.0) && firing.is_empty() {
            t = stop;
        }

        for &j in &firing {
            units[j].v = 0.0;
            counts[j] += 1;
            if t > t0 {
                since_origin[j] += 1;
            }
            if let Some(log) = spike_log.as_mut() {
                log[j].push(t);
            }
            let w = net.coupling.row(j);
            for (unit, &wij) in units.iter_mut().zip(w) {
                unit.mu -= wij;
            }
        }
        if !firing.is_empty() {
            for u in &units {
                if !u.mu.is_finite() || !u.v.is_finite() {
                    return Err(Error::Diverged {
                        time: t,
                        last_objective: trace.final_objective(),
                    });
                }
                max_abs_mu = max_abs_mu.max(u.mu.abs());
            }
        }

        if firing.is_empty() && t >= next_sample {
            t = next_sample;
            record(&mut trace, t, &rates(&since_origin, t), &counts)?;
            sample_index += 1;
            if t >= cfg.t_max {
                break;
            }
        }
    }

    let x = rates(&since_origin, t);
    let span = t - t0;
    let u: Vec<f64> = mu_integral.iter().map(|m| m / span).collect();
    let activation: Vec<f64> = (0..n).map(|i| net.activation(i, u[i])).collect();
    let residual = x
        .iter()
        .zip(&activation)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let x_max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    trace.set_diag("final_time", t);
    trace.set_diag("max_abs_mu", max_abs_mu);
    trace.set_diag("residual_inf", residual);
    trace.set_diag("residual_rel", residual / x_max.max(1.0));
    trace.set_diag("total_spikes", counts.iter().sum::<u64>() as f64);
    trace.set_vector("u", u);
    trace.set_vector("x_hat", x);
    trace.set_vector("activation", activation);
    trace.set_vector("column_norms", net.scale.clone());
    Ok(trace)
}
