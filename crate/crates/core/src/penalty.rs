//! Sparsity penalties, the activation (threshold) maps they induce, and a
//! numerical checker for the three admissibility rules.
//!
//! For a penalty `C` and weight `λ`, the activation `T_λ` is the inverse of
//! `a ↦ a + λ C′(a)` on the active region; `T_λ(u) = 0` whenever
//! `u ≤ λ C′(0)`. L1, Elastic-Net and the log barrier have closed forms;
//! the exponential, logarithmic and arctangent penalties are inverted by a
//! bracketed Newton/bisection search on `u − a − λ C′(a)`.
//!
//! Vector penalties are applied componentwise and summed. Rule 1's
//! subanalyticity requirement is not machine-checkable; it holds for all
//! built-in kinds and is assumed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual tolerance of the implicit threshold solve, relative to `max(1, |u|)`.
pub const THRESHOLD_TOL: f64 = 1e-12;

/// Relative step of the central difference used by the rule-3 check:
/// `C″(x) ≈ (C′(x(1+h)) − C′(x(1−h))) / (2 x h)`.
pub const RULE3_REL_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Penalty {
    L1,
    /// `ρ a + (1−ρ)/2 a²`
    ElasticNet { rho: f64 },
    /// `z − log(z)/(γλ)`; the barrier carries the λ it was built for.
    LogBarrier { gamma: f64, lambda: f64 },
    /// `1 − e^{−γa}`
    Exp { gamma: f64 },
    /// `log(a + θ)`
    Log { theta: f64 },
    /// `arctan(a/η)`
    Atan { eta: f64 },
}

/// Whether coefficients are constrained to be non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignMode {
    Nonneg,
    Free,
}

impl Penalty {
    pub fn name(&self) -> &'static str {
        match self {
            Penalty::L1 => "l1",
            Penalty::ElasticNet { .. } => "elastic-net",
            Penalty::LogBarrier { .. } => "log-barrier",
            Penalty::Exp { .. } => "exp",
            Penalty::Log { .. } => "log",
            Penalty::Atan { .. } => "atan",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Penalty::L1 => Ok(()),
            Penalty::ElasticNet { rho } if !(rho > 0.0 && rho <= 1.0) => {
                bad(format!("elastic-net rho must lie in (0, 1], got {rho}"))
            }
            Penalty::LogBarrier { gamma, lambda } if !(gamma > 0.0 && lambda > 0.0) => bad(
                format!("log barrier needs gamma > 0 and lambda > 0, got {gamma}, {lambda}"),
            ),
            Penalty::Exp { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("exp penalty gamma must be > 0, got {gamma}"))
            }
            Penalty::Log { theta } if !(theta >= 1.0 && theta.is_finite()) => {
                bad(format!("log penalty theta must be >= 1, got {theta}"))
            }
            Penalty::Atan { eta } if !(eta > 0.0 && eta.is_finite()) => {
                bad(format!("atan penalty eta must be > 0, got {eta}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_convex(&self) -> bool {
        matches!(self, Penalty::L1 | Penalty::ElasticNet { .. })
    }

    /// `C̃(a)` for `a ≥ 0` (`a > 0` for the barrier).
    pub fn value(&self, a: f64) -> Result<f64> {
        self.check_domain(a)?;
        Ok(match *self {
            Penalty::L1 => a,
            Penalty::ElasticNet { rho } => rho * a + 0.5 * (1.0 - rho) * a * a,
            Penalty::LogBarrier { gamma, lambda } => a - a.ln() / (gamma * lambda),
            Penalty::Exp { gamma } => 1.0 - (-gamma * a).exp(),
            Penalty::Log { theta } => (a + theta).ln(),
            Penalty::Atan { eta } => (a / eta).atan(),
        })
    }

    /// `C̃′(a)`
    pub fn grad(&self, a: f64) -> Result<f64> {
        self.check_domain(a)?;
        Ok(self.grad_unchecked(a))
    }

    /// Analytic `C̃″(a)`, used by the implicit threshold solver.
    pub fn curvature(&self, a: f64) -> Result<f64> {
        self.check_domain(a)?;
        Ok(match *self {
            Penalty::L1 => 0.0,
            Penalty::ElasticNet { rho } => 1.0 - rho,
            Penalty::LogBarrier { gamma, lambda } => 1.0 / (gamma * lambda * a * a),
            Penalty::Exp { gamma } => -gamma * gamma * (-gamma * a).exp(),
            Penalty::Log { theta } => -1.0 / ((a + theta) * (a + theta)),
            Penalty::Atan { eta } => {
                let d = eta * eta + a * a;
                -2.0 * a * eta / (d * d)
            }
        })
    }

    /// `ln C̃′(a)`, computed without underflow where a closed form exists;
    /// `−∞` or NaN when `C̃′(a) ≤ 0`.
    pub fn log_grad(&self, a: f64) -> Result<f64> {
        self.check_domain(a)?;
        Ok(match *self {
            Penalty::Exp { gamma } => gamma.ln() - gamma * a,
            _ => self.grad_unchecked(a).ln(),
        })
    }

    #[inline]
    fn grad_unchecked(&self, a: f64) -> f64 {
        match *self {
            Penalty::L1 => 1.0,
            Penalty::ElasticNet { rho } => rho + (1.0 - rho) * a,
            Penalty::LogBarrier { gamma, lambda } => 1.0 - 1.0 / (gamma * lambda * a),
            Penalty::Exp { gamma } => gamma * (-gamma * a).exp(),
            Penalty::Log { theta } => 1.0 / (a + theta),
            Penalty::Atan { eta } => eta / (eta * eta + a * a),
        }
    }

    fn check_domain(&self, a: f64) -> Result<()> {
        if !a.is_finite() {
            return Err(Error::NonFinite("penalty argument"));
        }
        match self {
            Penalty::LogBarrier { .. } if a <= 0.0 => Err(Error::InvalidParameter(format!(
                "log barrier is undefined at a = {a} <= 0"
            ))),
            Penalty::LogBarrier { .. } => Ok(()),
            _ if a < 0.0 => Err(Error::InvalidParameter(format!(
                "penalty argument must be non-negative, got {a}"
            ))),
            _ => Ok(()),
        }
    }

    /// Penalty of a whole coefficient vector: `Σ C̃(|a_i|)`. The barrier is
    /// `+∞` outside its open domain.
    pub fn total(&self, a: &[f64]) -> f64 {
        match self {
            Penalty::LogBarrier { .. } if a.iter().any(|&x| x <= 0.0) => f64::INFINITY,
            _ => a
                .iter()
                .map(|x| self.value(x.abs()).expect("domain checked"))
                .sum(),
        }
    }

    /// Activation map `T_λ(u)`. Free sign mode applies the odd extension
    /// `sign(u) T_λ(|u|)`; the barrier has no free-sign form.
    pub fn threshold(&self, lambda: f64, u: f64, mode: SignMode) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold weight must be positive, got {lambda}"
            )));
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("threshold input"));
        }
        match mode {
            SignMode::Nonneg => Ok(self.threshold_one_sided(lambda, u)),
            SignMode::Free => {
                if matches!(self, Penalty::LogBarrier { .. }) {
                    return Err(Error::Unsupported(
                        "the log barrier keeps variables positive; use the split problem".into(),
                    ));
                }
                Ok(u.signum() * self.threshold_one_sided(lambda, u.abs()))
            }
        }
    }

    /// One-sided activation without argument checks; the engine calls this
    /// on every neuron at every step.
    pub(crate) fn threshold_one_sided(&self, lambda: f64, u: f64) -> f64 {
        match *self {
            Penalty::L1 => (u - lambda).max(0.0),
            Penalty::ElasticNet { rho } => {
                if u <= lambda * rho {
                    0.0
                } else {
                    (u - lambda * rho) / (lambda * (1.0 - rho) + 1.0)
                }
            }
            Penalty::LogBarrier {
                gamma,
                lambda: own,
            } => {
                // root of a² + (λ−u)a − λ/(γλ_C) = 0, written to avoid cancellation
                let c = lambda / (gamma * own);
                let x = u - lambda;
                let d = (x * x + 4.0 * c).sqrt();
                if x >= 0.0 {
                    0.5 * (x + d)
                } else {
                    2.0 * c / (d - x)
                }
            }
            Penalty::Exp { .. } | Penalty::Log { .. } | Penalty::Atan { .. } => {
                self.implicit_threshold(lambda, u)
            }
        }
    }

    fn implicit_threshold(&self, lambda: f64, u: f64) -> f64 {
        if u <= lambda * self.grad_unchecked(0.0) {
            return 0.0;
        }
        // h(a) = a + λC′(a) − u: h(0) < 0, h(u) = λC′(u) > 0.
        let h = |a: f64| a + lambda * self.grad_unchecked(a) - u;
        let tol = THRESHOLD_TOL * u.abs().max(1.0);
        let (mut lo, mut hi) = (0.0, u);
        let mut a = (u - lambda * self.grad_unchecked(u)).clamp(lo, hi);
        for _ in 0..200 {
            let r = h(a);
            if r.abs() <= tol {
                return a;
            }
            if r < 0.0 {
                lo = a;
            } else {
                hi = a;
            }
            let slope = 1.0 + lambda * self.curvature(a).unwrap_or(0.0);
            let newton = a - r / slope;
            a = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        a
    }

    /// Componentwise proximal map of `step_lambda · C̃`; only the convex
    /// kinds have one here.
    pub fn prox(&self, step_lambda: f64, v: &[f64], mode: SignMode) -> Result<Vec<f64>> {
        if !self.is_convex() {
            return Err(Error::Unsupported(format!(
                "no proximal operator for the {} penalty",
                self.name()
            )));
        }
        v.iter()
            .map(|&x| self.threshold(step_lambda, x, mode))
            .collect()
    }

    /// Numerical check of the admissibility rules on a grid of positive
    /// points:
    /// 1. `C̃ ≥ 0`,
    /// 2. `C̃′ > 0`, tested as `ln C̃′ > −∞` so tails that underflow still count,
    /// 3. `C̃″ > −1/λ` (central difference, step [`RULE3_REL_STEP`]·x).
    pub fn validate_rules(&self, lambda: f64, grid: &[f64]) -> Result<RuleReport> {
        self.validate()?;
        if grid.is_empty() {
            return Err(Error::InvalidParameter("rule grid is empty".into()));
        }
        if let Some(&bad) = grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "rule grid points must be positive, got {bad}"
            )));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        let mut report = RuleReport {
            rule1_ok: true,
            rule2_ok: true,
            rule3_ok: true,
            witness: None,
            lambda_tested: lambda,
        };
        let note = |report: &mut RuleReport, rule: u8, point: f64, value: f64| {
            if report.witness.is_none() || rule == 3 && report.witness.map(|w| w.rule) != Some(3)
            {
                report.witness = Some(RuleWitness { rule, point, value });
            }
        };
        for &x in grid {
            let c = self.value(x)?;
            if !(c >= 0.0) && report.rule1_ok {
                report.rule1_ok = false;
                note(&mut report, 1, x, c);
            }
            let g = self.log_grad(x)?;
            if !(g > f64::NEG_INFINITY) && report.rule2_ok {
                report.rule2_ok = false;
                note(&mut report, 2, x, g);
            }
            let h = RULE3_REL_STEP * x;
            let c2 = (self.grad(x + h)? - self.grad(x - h)?) / (2.0 * h);
            if !(c2 > -1.0 / lambda) && report.rule3_ok {
                report.rule3_ok = false;
                note(&mut report, 3, x, c2);
            }
        }
        Ok(report)
    }
}

/// 512 log-spaced points in `[1e-6, 1e3]`.
pub fn default_rule_grid() -> Vec<f64> {
    log_grid(1e-6, 1e3, 512)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleWitness {
    pub rule: u8,
    pub point: f64,
    /// The offending value: `C̃`, `C̃′` or the estimated `C̃″`.
    pub value: f64,
}

/// Result of [`Penalty::validate_rules`]. When several rules fail the
/// witness reports rule 3 if it failed, otherwise the first failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleReport {
    pub rule1_ok: bool,
    pub rule2_ok: bool,
    pub rule3_ok: bool,
    pub witness: Option<RuleWitness>,
    pub lambda_tested: f64,
}

impl RuleReport {
    pub fn all_ok(&self) -> bool {
        self.rule1_ok && self.rule2_ok && self.rule3_ok
    }
}

impl std::fmt::Display for RuleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(f, "lambda = {}", self.lambda_tested)?;
        writeln!(f, "rule1 (non-negative)        {}", flag(self.rule1_ok))?;
        writeln!(f, "rule2 (positive derivative) {}", flag(self.rule2_ok))?;
        writeln!(f, "rule3 (C'' > -1/lambda)     {}", flag(self.rule3_ok))?;
        if let Some(w) = self.witness {
            writeln!(
                f,
                "witness: rule{} violated at x = {:e} (value {:e})",
                w.rule, w.point, w.value
            )?;
        }
        Ok(())
    }
}
