//! Spiking locally competitive network solver.
//!
//! Each unknown is a neuron. Its average somatic current `u` follows
//!
//! ```text
//! u̇ = b − u − W â − [u − u(t0)] / (t − t0)
//! ```
//!
//! (the last term optional), where `â` are decoded firing rates and `W`
//! the off-diagonal Gram matrix. The neuron is driven with the current
//! `g⁻¹(κ T_λ(u))` so that it fires at the rate prescribed by the penalty's
//! activation map; at equilibrium the decoded rates solve the sparse
//! recovery problem.
//!
//! Internally the network works on unit-norm columns: with column norms
//! `d`, neuron `i` carries `x_i = d_i a_i`, drive `b_i / d_i` and couplings
//! `⟨A_i, A_j⟩ / (d_i d_j)`. The zero-diagonal coupling convention is then
//! exact for any dictionary, and decoding divides by `d` again. Columns of
//! zero norm are disconnected and decode to zero. Rates, currents and
//! residuals reported in diagnostics are in these network units.

mod classic;
mod rates;
mod split;

pub use classic::solve_classic;
pub use rates::{estimate_rates, RateEstimator};
pub use split::{merge_split_solution, split_problem};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainCurve;
use crate::matrix::DenseMatrix;
use crate::neuron::{NeuronModel, NeuronState, Stepper};
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;
use crate::trace::{Sample, SolveTrace};
use rates::RateTracker;

/// How the target activation is turned into an injected current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionMode {
    /// `I = g⁻¹(κ T_λ(u))`.
    ExplicitThreshold,
    /// `I = g⁻¹(κ max(u − λ C̃′(â), 0))`, with `â` from the previous step.
    /// Needs no inverse of the penalty's activation map.
    ImplicitGrad,
}

/// How lateral inhibition reaches the average currents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `u` integrates `b − W â` with the decoded rates.
    RateCoupled,
    /// Each spike of `j` kicks the instantaneous current `μ_i` by
    /// `−w_ij / κ`, which relaxes back to `b_i` with unit time constant;
    /// `u` is the running average of `μ` since `t0` (cumulative estimator)
    /// or since 0.
    EventDriven,
}

/// Bridge between coefficient values and firing rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateScale {
    /// 1 for PIF/LIF; otherwise chosen so the largest drive `max b_i / d_i`
    /// maps to 80% of the gain curve's maximum rate.
    Auto,
    Fixed { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Step size; `None` uses the gain table's step, else the model default.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub rate_estimator: RateEstimator,
    pub anchor_correction: bool,
    pub injection: InjectionMode,
    pub rate_scale: RateScale,
    pub coupling: Coupling,
    pub seed: u64,
    /// Initial membrane potentials are drawn uniformly from this fraction of
    /// the reset-to-threshold range (0 starts every neuron at rest).
    pub init_jitter: f64,
    /// Sampling interval; `None` gives 200 samples over `t_max`.
    pub sample_every: Option<f64>,
    /// Span over which the objective must change by less than
    /// `plateau_tol` (relative) to stop early; `None` means `t_max / 10`.
    pub plateau_window: Option<f64>,
    pub plateau_tol: f64,
    pub keep_spike_log: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 50.0,
            rate_estimator: RateEstimator::Cumulative { t0: 0.0 },
            anchor_correction: true,
            injection: InjectionMode::ExplicitThreshold,
            rate_scale: RateScale::Auto,
            coupling: Coupling::RateCoupled,
            seed: 0,
            init_jitter: 0.0,
            sample_every: None,
            plateau_window: None,
            plateau_tol: 1e-8,
            keep_spike_log: false,
        }
    }
}

impl EngineConfig {
    /// Step size actually used with `model` and `gain`.
    pub fn resolve_dt(&self, model: &NeuronModel, gain: &GainCurve) -> f64 {
        self.dt.unwrap_or(match gain {
            GainCurve::Table(t) => t.header.dt,
            _ => model.default_dt(),
        })
    }

    fn validate(&self, dt: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(dt > 0.0 && dt < 1.0) {
            return bad(format!(
                "dt must lie in (0, 1) for a stable Euler step of the average current, got {dt}"
            ));
        }
        if !(self.t_max > dt) || !self.t_max.is_finite() {
            return bad(format!("t_max must exceed dt, got {}", self.t_max));
        }
        if let RateScale::Fixed { kappa } = self.rate_scale {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return bad(format!("rate scale must be > 0, got {kappa}"));
            }
        }
        if let Some(s) = self.sample_every {
            if !(s > 0.0) {
                return bad(format!("sample_every must be > 0, got {s}"));
            }
        }
        if !(0.0..=1.0).contains(&self.init_jitter) {
            return bad(format!("init_jitter must lie in [0, 1], got {}", self.init_jitter));
        }
        if !(self.plateau_tol >= 0.0) {
            return bad("plateau_tol must be >= 0".into());
        }
        self.rate_estimator.validate()
    }
}

/// Unit-column view of a problem shared by the spiking solvers.
#[derive(Debug, Clone)]
pub(crate) struct Network {
    pub scale: Vec<f64>,
    pub drive: Vec<f64>,
    pub coupling: DenseMatrix,
    pub penalty: Penalty,
    pub lambda: f64,
}

impl Network {
    pub fn new(problem: &SensingProblem) -> Self {
        let g = problem.gram_cache();
        let n = g.n();
        let scale: Vec<f64> = g.diag.iter().map(|d| d.sqrt()).collect();
        let inv: Vec<f64> = scale
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
            .collect();
        let drive = g.b.iter().zip(&inv).map(|(b, s)| b * s).collect();
        let coupling = DenseMatrix::from_fn(n, n, |i, j| g.w.get(i, j) * inv[i] * inv[j]);
        if !g.unit_columns(1e-9) {
            log::info!("dictionary columns are not unit-norm; solving on rescaled columns");
        }
        Self {
            scale,
            drive,
            coupling,
            penalty: problem.penalty(),
            lambda: problem.lambda(),
        }
    }

    pub fn n(&self) -> usize {
        self.scale.len()
    }

    pub fn enabled(&self, i: usize) -> bool {
        self.scale[i] > 0.0
    }

    /// Activation map in network units: `d T_{λ/d²}(u / d)`.
    #[inline]
    pub fn activation(&self, i: usize, u: f64) -> f64 {
        let d = self.scale[i];
        if d == 0.0 {
            return 0.0;
        }
        d * self
            .penalty
            .threshold_one_sided(self.lambda / (d * d), u / d)
    }

    /// `max(u − (λ/d) C̃′(x/d), 0)` with the current estimate `x`.
    #[inline]
    pub fn implicit_target(&self, i: usize, u: f64, x: f64) -> f64 {
        let d = self.scale[i];
        if d == 0.0 {
            return 0.0;
        }
        let a = (x / d).max(f64::MIN_POSITIVE);
        let grad = self.penalty.grad(a).unwrap_or(f64::INFINITY);
        (u - self.lambda / d * grad).max(0.0)
    }

    pub fn decode(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.scale)
            .map(|(&x, &d)| if d > 0.0 { x / d } else { 0.0 })
            .collect()
    }
}

/// Dynamical state of a spiking solve.
#[derive(Debug, Clone)]
pub struct EngineState {
    pub t: f64,
    /// Average somatic currents (network units).
    pub u: Vec<f64>,
    /// Decoded rates divided by κ (network units).
    pub x_hat: Vec<f64>,
    /// Instantaneous somatic currents.
    pub mu: Vec<f64>,
    pub neurons: Vec<NeuronState>,
    pub spike_counts: Vec<u64>,
    /// Per-neuron spike times, when requested in the config.
    pub spike_log: Option<Vec<Vec<f64>>>,
    pub kappa: f64,
}

fn resolve_kappa(cfg: &EngineConfig, model: &NeuronModel, gain: &GainCurve, drive: &[f64]) -> f64 {
    match cfg.rate_scale {
        RateScale::Fixed { kappa } => kappa,
        RateScale::Auto if !model.is_biophysical() => 1.0,
        RateScale::Auto => {
            let peak = drive.iter().fold(0.0f64, |m, &b| m.max(b));
            let r_max = gain.max_rate();
            if peak > 0.0 && r_max.is_finite() {
                0.8 * r_max / peak
            } else {
                1.0
            }
        }
    }
}

/// Largest rate the engine will request from the gain curve.
fn rate_cap(gain: &GainCurve) -> f64 {
    match gain {
        GainCurve::Lif(p) if p.t_ref > 0.0 => 0.999 / p.t_ref,
        other => other.max_rate(),
    }
}

pub fn solve(
    problem: &SensingProblem,
    model: &NeuronModel,
    gain: &GainCurve,
    cfg: &EngineConfig,
) -> Result<SolveTrace> {
    solve_with_state(problem, model, gain, cfg).map(|(trace, _)| trace)
}

/// Runs the spiking solver and also returns its final state.
pub fn solve_with_state(
    problem: &SensingProblem,
    model: &NeuronModel,
    gain: &GainCurve,
    cfg: &EngineConfig,
) -> Result<(SolveTrace, EngineState)> {
    if problem.sign_mode() != SignMode::Nonneg {
        return Err(Error::Unsupported(
            "spiking rates are non-negative; pass free-sign problems through split_problem".into(),
        ));
    }
    let dt = cfg.resolve_dt(model, gain);
    cfg.validate(dt)?;
    if let GainCurve::Table(t) = gain {
        if (t.header.dt - dt).abs() > 1e-12 * dt {
            log::warn!(
                "gain table was measured at dt = {} but the engine steps at {dt}",
                t.header.dt
            );
        }
    }
    if cfg.injection == InjectionMode::ExplicitThreshold {
        // every built-in penalty has an activation map; nothing to check
    } else if matches!(problem.penalty(), Penalty::LogBarrier { .. }) {
        return Err(Error::Unsupported(
            "the gradient injection mode needs a penalty defined at zero".into(),
        ));
    }

    let net = Network::new(problem);
    let n = net.n();
    let stepper: Stepper = model.stepper(dt)?;
    let kappa = resolve_kappa(cfg, model, gain, &net.drive);
    let cap = rate_cap(gain);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut neurons: Vec<NeuronState> = (0..n).map(|_| stepper.initial_state()).collect();
    if cfg.init_jitter > 0.0 {
        let span = jitter_span(model);
        for st in &mut neurons {
            st.v += cfg.init_jitter * span * rng.random::<f64>();
        }
    }

    let mut u = vec![0.0; n];
    let u_origin = u.clone();
    let mut mu = net.drive.clone();
    let mut mu_sum = vec![0.0; n];
    let mut mu_origin = 0.0;
    let mut tracker = RateTracker::new(cfg.rate_estimator, n, dt);
    let mut counts = vec![0u64; n];
    let mut spike_log = cfg.keep_spike_log.then(|| vec![Vec::new(); n]);
    let mut spikes: Vec<usize> = Vec::new();
    let mut x_hat = vec![0.0; n];
    let mut target = vec![0.0; n];

    let t0 = match cfg.rate_estimator {
        RateEstimator::Cumulative { t0 } => t0,
        _ => 0.0,
    };
    let steps = (cfg.t_max / dt).round() as u64;
    let sample_every = cfg.sample_every.unwrap_or(cfg.t_max / 200.0);
    let sample_stride = ((sample_every / dt).round() as u64).max(1);
    let plateau_window = cfg.plateau_window.unwrap_or(cfg.t_max / 10.0);
    let plateau_lag = ((plateau_window / (sample_stride as f64 * dt)).round() as usize).max(1);

    let mut trace = SolveTrace::new(format!("slca-{}", model.id()));
    let mut saturations = 0u64;
    let mut max_abs_u = 0.0f64;
    let mut max_abs_mu = 0.0f64;
    let mut max_rate = 0.0f64;
    let mut plateau = false;
    let mut t = 0.0;

    let record = |trace: &mut SolveTrace, t: f64, x_hat: &[f64], counts: &[u64]| -> Result<()> {
        let coeffs = net.decode(x_hat);
        let objective = problem.objective(&coeffs)?;
        trace.push(Sample {
            time: t,
            objective,
            coeffs,
            spikes: Some(counts.to_vec()),
        })
    };
    record(&mut trace, 0.0, &x_hat, &counts)?;

    for step in 0..steps {
        // (1) decoded rates and the coupling they produce
        let scale = tracker.scale(t) / kappa;
        for i in 0..n {
            x_hat[i] = tracker.raw()[i] * scale;
            max_rate = max_rate.max(x_hat[i] * kappa);
        }

        // (2) average currents
        match cfg.coupling {
            Coupling::RateCoupled => {
                let coupled = tracker.coupled();
                let anchor = cfg.anchor_correction && t > t0;
                for i in 0..n {
                    let mu_i = net.drive[i] - coupled[i] * scale;
                    max_abs_mu = max_abs_mu.max(mu_i.abs());
                    let mut du = mu_i - u[i];
                    if anchor {
                        du -= (u[i] - u_origin[i]) / (t - t0);
                    }
                    u[i] += dt * du;
                }
            }
            Coupling::EventDriven => {
                let origin = if t >= t0 { t0 } else { 0.0 };
                if t >= t0 && mu_origin < t0 {
                    mu_sum.iter_mut().for_each(|s| *s = 0.0);
                    mu_origin = t0;
                }
                let decay = (-dt).exp();
                for i in 0..n {
                    // exact average of the relaxing current over the step
                    let gap = mu[i] - net.drive[i];
                    mu_sum[i] += net.drive[i] * dt + gap * (1.0 - decay);
                    mu[i] = net.drive[i] + gap * decay;
                    max_abs_mu = max_abs_mu.max(mu[i].abs());
                    u[i] = mu_sum[i] / (t + dt - origin);
                }
            }
        }
        for &ui in &u {
            if !ui.is_finite() {
                return Err(Error::Diverged {
                    time: t,
                    last_objective: trace.final_objective(),
                });
            }
            max_abs_u = max_abs_u.max(ui.abs());
        }

        // (3)-(5) target activation, injected current, neuron update
        spikes.clear();
        for i in 0..n {
            if !net.enabled(i) {
                continue;
            }
            target[i] = match cfg.injection {
                InjectionMode::ExplicitThreshold => net.activation(i, u[i]),
                InjectionMode::ImplicitGrad => net.implicit_target(i, u[i], x_hat[i]),
            };
            let mut rate = kappa * target[i];
            if rate > cap {
                rate = cap;
                saturations += 1;
            }
            let current = gain.inverse(rate)?;
            if stepper.step(&mut neurons[i], current)? {
                spikes.push(i);
            }
        }
        let t_next = (step + 1) as f64 * dt;
        for &j in &spikes {
            counts[j] += 1;
            if let Some(log) = spike_log.as_mut() {
                log[j].push(t_next);
            }
            if cfg.coupling == Coupling::EventDriven {
                let w = net.coupling.row(j);
                for i in 0..n {
                    mu[i] -= w[i] / kappa;
                }
            }
        }
        tracker.advance(t, &spikes, &net.coupling);
        t = t_next;

        if (step + 1) % sample_stride == 0 || step + 1 == steps {
            tracker.refresh(&net.coupling);
            let scale = tracker.scale(t) / kappa;
            for i in 0..n {
                x_hat[i] = tracker.raw()[i] * scale;
            }
            record(&mut trace, t, &x_hat, &counts)?;
            let k = trace.samples.len();
            if k > plateau_lag && step + 1 < steps {
                // every sample in the window must agree, not just the ends:
                // spike-count estimates can repeat a value by coincidence
                let window = &trace.samples[k - 1 - plateau_lag..];
                let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s.objective), hi.max(s.objective))
                });
                if hi - lo <= cfg.plateau_tol * lo.abs().max(hi.abs()) {
                    plateau = true;
                    break;
                }
            }
        }
    }

    let scale = tracker.scale(t) / kappa;
    for i in 0..n {
        x_hat[i] = tracker.raw()[i] * scale;
    }
    let activation: Vec<f64> = (0..n).map(|i| net.activation(i, u[i])).collect();
    let residual = x_hat
        .iter()
        .zip(&activation)
        .map(|(x, a)| (x - a).abs())
        .fold(0.0f64, f64::max);
    let x_max = x_hat.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    trace.set_diag("kappa", kappa);
    trace.set_diag("dt", dt);
    trace.set_diag("final_time", t);
    trace.set_diag("saturation_count", saturations as f64);
    trace.set_diag("max_abs_u", max_abs_u);
    trace.set_diag("max_abs_mu", max_abs_mu);
    trace.set_diag("max_rate", max_rate);
    trace.set_diag("residual_inf", residual);
    trace.set_diag("residual_rel", residual / x_max.max(1.0));
    trace.set_diag("total_spikes", counts.iter().sum::<u64>() as f64);
    trace.set_diag("stopped_on_plateau", if plateau { 1.0 } else { 0.0 });
    trace.set_vector("u", u.clone());
    trace.set_vector("x_hat", x_hat.clone());
    trace.set_vector("activation", activation.clone());
    trace.set_vector("decoded_activation", net.decode(&activation));
    trace.set_vector("column_norms", net.scale.clone());
    if saturations > 0 {
        log::warn!("gain saturated {saturations} times; consider a smaller rate scale");
    }

    let state = EngineState {
        t,
        u,
        x_hat,
        mu,
        neurons,
        spike_counts: counts,
        spike_log,
        kappa,
    };
    Ok((trace, state))
}

fn jitter_span(model: &NeuronModel) -> f64 {
    match model {
        NeuronModel::Pif(p) => p.v_th - p.v_reset,
        NeuronModel::Lif(p) => p.v_th - p.v_reset,
        NeuronModel::Gif(p) => p.theta_inf - p.v_reset,
        // a few mV of spread for the conductance models
        NeuronModel::MorrisLecar(_) | NeuronModel::WangBuzsaki(_) => 5.0,
    }
}

#[cfg(test)]
mod tests;
