//! Reference solvers: proximal gradient (ISTA), its accelerated variant
//! (FISTA) and the analog LCA integrated with RK4.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norm2, DenseMatrix};
use crate::problem::SensingProblem;
use crate::trace::{Sample, SolveTrace};

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 100_000;
const LIPSCHITZ_MARGIN: f64 = 1.01;

/// Upper estimate of the Lipschitz constant of `a ↦ Aᵀ(Aa − s)`: the
/// largest eigenvalue of `AᵀA` by power iteration, times 1.01.
///
/// Iterates until the eigen-residual `‖AᵀA v − ρ v‖` drops below `1e−8 ρ`,
/// which bounds the error of the Rayleigh quotient `ρ` by the same amount.
pub fn lipschitz(a: &DenseMatrix) -> Result<f64> {
    let n = a.cols();
    if n == 0 || a.data().iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidParameter("lipschitz constant of a zero matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= norm);
    for _ in 0..POWER_MAX_ITERS {
        let w = a.tr_mul_vec(&a.mul_vec(&v)?)?;
        let rho: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(y, x)| (y - rho * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= POWER_TOL * rho {
            return Ok(LIPSCHITZ_MARGIN * rho);
        }
        let norm = norm2(&w);
        if norm == 0.0 {
            // the start vector fell in the null space
            return Err(Error::NoConvergence("power iteration collapsed to zero".into()));
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::NoConvergence(format!(
        "power iteration did not settle in {POWER_MAX_ITERS} iterations"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepRule {
    /// `1 / L` with `L` from [`lipschitz`].
    AutoLipschitz,
    Fixed { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxSolverConfig {
    pub max_iters: usize,
    /// Stop once the relative objective change stays below this for two
    /// consecutive iterations.
    pub tol: f64,
    pub step: StepRule,
    /// FISTA only: reset the momentum whenever the objective increases.
    pub restart: bool,
    /// Keep every `record_every`-th iterate in the trace (plus the last).
    pub record_every: usize,
}

impl Default for ProxSolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-10,
            step: StepRule::AutoLipschitz,
            restart: false,
            record_every: 1,
        }
    }
}

impl ProxSolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        if let StepRule::Fixed { value } = self.step {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("step must be > 0, got {value}")));
            }
        }
        Ok(())
    }
}

pub fn ista(problem: &SensingProblem, cfg: &ProxSolverConfig) -> Result<SolveTrace> {
    proximal_gradient(problem, cfg, false)
}

pub fn fista(problem: &SensingProblem, cfg: &ProxSolverConfig) -> Result<SolveTrace> {
    proximal_gradient(problem, cfg, true)
}

fn proximal_gradient(problem: &SensingProblem, cfg: &ProxSolverConfig, accelerate: bool) -> Result<SolveTrace> {
    cfg.validate()?;
    let penalty = problem.penalty();
    if !penalty.is_convex() {
        return Err(Error::Unsupported(format!(
            "proximal gradient needs a convex penalty, got {}",
            penalty.name()
        )));
    }
    let a = problem.matrix();
    let mode = problem.sign_mode();
    let step = match cfg.step {
        StepRule::AutoLipschitz => 1.0 / lipschitz(a)?,
        StepRule::Fixed { value } => value,
    };
    let weight = step * problem.lambda();

    let n = problem.n();
    let mut x = vec![0.0; n];
    if matches!(penalty, crate::penalty::Penalty::LogBarrier { .. }) {
        // start inside the barrier's domain
        x = penalty.prox(weight, &x, mode)?;
    }
    let mut y = x.clone();
    let mut momentum: f64 = 1.0;
    let mut objective = problem.objective(&x)?;
    let mut trace = SolveTrace::new(if accelerate { "fista" } else { "ista" });
    trace.push(Sample {
        time: 0.0,
        objective,
        coeffs: x.clone(),
        spikes: None,
    })?;

    let mut quiet = 0;
    let mut iters = 0;
    for k in 1..=cfg.max_iters {
        iters = k;
        // gradient step on ½‖s − Ay‖² then the proximal map
        let r = problem.residual(&y);
        let g = a.tr_mul_vec(&r)?;
        let v: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi + step * gi).collect();
        let next = penalty.prox(weight, &v, mode)?;
        let next_objective = problem.objective(&next)?;
        if !next_objective.is_finite() {
            return Err(Error::Diverged {
                time: k as f64,
                last_objective: Some(objective),
            });
        }

        if accelerate {
            if cfg.restart && next_objective > objective {
                momentum = 1.0;
                y = next.clone();
            } else {
                let following = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                let beta = (momentum - 1.0) / following;
                y = next
                    .iter()
                    .zip(&x)
                    .map(|(xn, xo)| xn + beta * (xn - xo))
                    .collect();
                momentum = following;
            }
        } else {
            y = next.clone();
        }

        let change = (next_objective - objective).abs();
        let scale = next_objective.abs().max(objective.abs()).max(f64::MIN_POSITIVE);
        quiet = if change <= cfg.tol * scale { quiet + 1 } else { 0 };
        x = next;
        objective = next_objective;
        let done = quiet >= 2 || k == cfg.max_iters;
        if k % cfg.record_every == 0 || done {
            trace.push(Sample {
                time: k as f64,
                objective,
                coeffs: x.clone(),
                spikes: None,
            })?;
        }
        if done {
            break;
        }
    }
    trace.set_diag("iterations", iters as f64);
    trace.set_diag("step", step);
    trace.set_diag("converged", if quiet >= 2 { 1.0 } else { 0.0 });
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LcaOdeConfig {
    pub tau: f64,
    /// `None` means `tau / 20`, which suits unit-norm columns. The linearized
    /// flow has rates up to `‖A‖² / τ`, so RK4 needs `dt ≲ 2.5 τ / ‖A‖²`
    /// on larger dictionaries.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// `None` gives 200 samples over `t_max`.
    pub sample_every: Option<f64>,
    /// Stop early once `‖u̇‖∞` falls below this.
    pub stationary_tol: f64,
}

impl Default for LcaOdeConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            dt: None,
            t_max: 200.0,
            sample_every: None,
            stationary_tol: 1e-12,
        }
    }
}

/// Analog LCA, `τ u̇ = b − u − (AᵀA − I) a` with `a = T_λ(u)`, integrated
/// with classical RK4. The trace is sampled in simulation time.
pub fn lca_ode(problem: &SensingProblem, cfg: &LcaOdeConfig) -> Result<SolveTrace> {
    let penalty = problem.penalty();
    if !penalty.is_convex() {
        return Err(Error::Unsupported(format!(
            "the analog LCA baseline needs a convex penalty, got {}",
            penalty.name()
        )));
    }
    let dt = cfg.dt.unwrap_or(cfg.tau / 20.0);
    if !(cfg.tau > 0.0) || !(dt > 0.0 && dt < cfg.tau) || !(cfg.t_max > dt) {
        return Err(Error::InvalidParameter(format!(
            "need tau > 0, 0 < dt < tau and t_max > dt; got tau = {}, dt = {dt}, t_max = {}",
            cfg.tau, cfg.t_max
        )));
    }
    let gram = problem.gram_cache();
    let lambda = problem.lambda();
    let mode = problem.sign_mode();
    let n = problem.n();
    let activate = |u: &[f64]| -> Result<Vec<f64>> {
        u.iter().map(|&x| penalty.threshold(lambda, x, mode)).collect()
    };
    let velocity = |u: &[f64]| -> Result<Vec<f64>> {
        let a = activate(u)?;
        let wa = gram.w.mul_vec(&a)?;
        Ok((0..n)
            .map(|i| (gram.b[i] - u[i] - wa[i] - (gram.diag[i] - 1.0) * a[i]) / cfg.tau)
            .collect())
    };

    let steps = (cfg.t_max / dt).round() as u64;
    let sample_every = cfg.sample_every.unwrap_or(cfg.t_max / 200.0);
    let stride = ((sample_every / dt).round() as u64).max(1);
    let mut u = vec![0.0; n];
    let mut trace = SolveTrace::new("lca-ode");
    let push = |trace: &mut SolveTrace, t: f64, u: &[f64]| -> Result<()> {
        let coeffs = activate(u)?;
        let objective = problem.objective(&coeffs)?;
        trace.push(Sample {
            time: t,
            objective,
            coeffs,
            spikes: None,
        })
    };
    push(&mut trace, 0.0, &u)?;

    let shifted = |u: &[f64], k: &[f64], h: f64| -> Vec<f64> { u.iter().zip(k).map(|(x, d)| x + h * d).collect() };
    let mut t = 0.0;
    let mut speed = f64::INFINITY;
    for step in 1..=steps {
        let k1 = velocity(&u)?;
        let k2 = velocity(&shifted(&u, &k1, 0.5 * dt))?;
        let k3 = velocity(&shifted(&u, &k2, 0.5 * dt))?;
        let k4 = velocity(&shifted(&u, &k3, dt))?;
        for i in 0..n {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged {
                time: t,
                last_objective: trace.final_objective(),
            });
        }
        t = step as f64 * dt;
        if step % stride == 0 || step == steps {
            speed = velocity(&u)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            push(&mut trace, t, &u)?;
            if speed <= cfg.stationary_tol {
                break;
            }
        }
    }
    let a = activate(&u)?;
    let wa = gram.w.mul_vec(&a)?;
    let stationarity = (0..n)
        .map(|i| (u[i] - gram.b[i] + wa[i] + (gram.diag[i] - 1.0) * a[i]).abs())
        .fold(0.0f64, f64::max);
    trace.set_diag("final_time", t);
    trace.set_diag("max_velocity", speed);
    trace.set_diag("stationarity", stationarity);
    trace.set_vector("u", u);
    Ok(trace)
}
