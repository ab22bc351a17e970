use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::matrix::{norm2, DenseMatrix};
use crate::penalty::{Penalty, SignMode};

/// `min ½‖s − A a‖² + λ C̃(a)`, optionally restricted to `a ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingProblem {
    a: DenseMatrix,
    s: Vec<f64>,
    lambda: f64,
    penalty: Penalty,
    sign_mode: SignMode,
}

/// Objective value together with whether `a` respects the sign constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub data_fit: f64,
    pub penalty: f64,
    pub feasible: bool,
}

impl SensingProblem {
    pub fn new(
        a: DenseMatrix,
        s: Vec<f64>,
        lambda: f64,
        penalty: Penalty,
        sign_mode: SignMode,
    ) -> Result<Self> {
        ensure_len("observation", a.rows(), s.len())?;
        ensure_finite("observation", &s)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and positive, got {lambda}"
            )));
        }
        penalty.validate()?;
        if let Penalty::LogBarrier { lambda: own, .. } = penalty {
            if own != lambda {
                return Err(Error::InvalidParameter(format!(
                    "log barrier was built for lambda = {own} but the problem uses {lambda}"
                )));
            }
        }
        Ok(Self {
            a,
            s,
            lambda,
            penalty,
            sign_mode,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn observation(&self) -> &[f64] {
        &self.s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn sign_mode(&self) -> SignMode {
        self.sign_mode
    }

    /// Number of measurements.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Number of unknowns.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn with_penalty(&self, penalty: Penalty) -> Result<Self> {
        Self::new(self.a.clone(), self.s.clone(), self.lambda, penalty, self.sign_mode)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let penalty = match self.penalty {
            Penalty::LogBarrier { gamma, .. } => Penalty::LogBarrier { gamma, lambda },
            p => p,
        };
        Self::new(self.a.clone(), self.s.clone(), lambda, penalty, self.sign_mode)
    }

    pub fn with_sign_mode(&self, sign_mode: SignMode) -> Self {
        Self {
            sign_mode,
            ..self.clone()
        }
    }

    /// Copy of the problem with unit-norm columns. Returns the original
    /// norms so solutions can be mapped back with `a_k = x_k / norm_k`.
    pub fn normalized(&self) -> (Self, Vec<f64>) {
        let (a, norms) = self.a.normalize_columns();
        (Self { a, ..self.clone() }, norms)
    }

    /// `½‖s − A a‖² + λ Σ C̃(|a_i|)` with a feasibility flag for nonneg mode.
    pub fn evaluate(&self, a: &[f64]) -> Result<Evaluation> {
        ensure_len("coefficients", self.n(), a.len())?;
        ensure_finite("coefficients", a)?;
        let r = self.residual(a);
        let data_fit = 0.5 * norm2(&r).powi(2);
        let pen = self.lambda * self.penalty.total(a);
        let feasible = match self.sign_mode {
            SignMode::Nonneg => a.iter().all(|&x| x >= 0.0),
            SignMode::Free => true,
        };
        Ok(Evaluation {
            value: data_fit + pen,
            data_fit,
            penalty: pen,
            feasible,
        })
    }

    pub fn objective(&self, a: &[f64]) -> Result<f64> {
        self.evaluate(a).map(|e| e.value)
    }

    /// `s − A a`
    pub fn residual(&self, a: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(a).expect("length checked by caller");
        for (ri, si) in r.iter_mut().zip(&self.s) {
            *ri = si - *ri;
        }
        r
    }

    /// `‖Aᵀs‖∞`, the smallest λ for which the L1 solution is zero.
    pub fn lambda_max(&self) -> f64 {
        lambda_max(&self.a, &self.s)
    }

    pub fn gram_cache(&self) -> GramCache {
        GramCache::new(&self.a, &self.s).expect("shape validated at construction")
    }
}

pub fn lambda_max(a: &DenseMatrix, s: &[f64]) -> f64 {
    a.tr_mul_vec(s)
        .map(|b| b.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .unwrap_or(0.0)
}

/// Lateral couplings and feed-forward drive of the network: off-diagonal
/// `AᵀA`, `Aᵀs`, and the squared column norms.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCache {
    pub w: DenseMatrix,
    pub b: Vec<f64>,
    pub diag: Vec<f64>,
}

impl GramCache {
    pub fn new(a: &DenseMatrix, s: &[f64]) -> Result<Self> {
        ensure_len("observation", a.rows(), s.len())?;
        let mut w = a.gram();
        let n = a.cols();
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            diag.push(w.get(i, i));
            w.set(i, i, 0.0);
        }
        let b = a.tr_mul_vec(s)?;
        Ok(Self { w, b, diag })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// Whether every column has unit norm to within `tol`.
    pub fn unit_columns(&self, tol: f64) -> bool {
        self.diag.iter().all(|d| (d - 1.0).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_problem(penalty: Penalty) -> SensingProblem {
        SensingProblem::new(
            DenseMatrix::identity(2),
            vec![1.0, 0.0],
            if let Penalty::ElasticNet { .. } = penalty { 1.0 } else { 0.5 },
            penalty,
            SignMode::Nonneg,
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = identity_problem(Penalty::L1);
        assert_abs_diff_eq!(p.objective(&[0.5, 0.0]).unwrap(), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(p.objective(&[0.0, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
        let en = identity_problem(Penalty::ElasticNet { rho: 0.5 });
        assert_abs_diff_eq!(en.objective(&[0.5, 0.0]).unwrap(), 0.4375, epsilon = 1e-15);
    }

    #[test]
    fn objective_errors_and_feasibility() {
        let p = identity_problem(Penalty::L1);
        assert!(matches!(
            p.objective(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(p.objective(&[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
        let e = p.evaluate(&[-0.1, 0.0]).unwrap();
        assert!(!e.feasible);
        assert!(p.with_sign_mode(SignMode::Free).evaluate(&[-0.1, 0.0]).unwrap().feasible);
    }

    #[test]
    fn construction_checks() {
        let a = DenseMatrix::identity(2);
        assert!(SensingProblem::new(a.clone(), vec![1.0], 0.1, Penalty::L1, SignMode::Nonneg).is_err());
        assert!(SensingProblem::new(a.clone(), vec![1.0, 0.0], 0.0, Penalty::L1, SignMode::Nonneg).is_err());
        let barrier = Penalty::LogBarrier { gamma: 1.0, lambda: 0.2 };
        assert!(SensingProblem::new(a.clone(), vec![1.0, 0.0], 0.1, barrier, SignMode::Nonneg).is_err());
        let ok = SensingProblem::new(a, vec![1.0, 0.0], 0.2, barrier, SignMode::Nonneg).unwrap();
        assert_eq!(ok.objective(&[0.0, 1.0]).unwrap(), f64::INFINITY);
        let moved = ok.with_lambda(0.3).unwrap();
        assert_eq!(moved.penalty(), Penalty::LogBarrier { gamma: 1.0, lambda: 0.3 });
    }

    #[test]
    fn gram_identity_and_duplicates() {
        let g = GramCache::new(&DenseMatrix::identity(2), &[1.0, 0.0]).unwrap();
        assert!(g.w.data().iter().all(|&x| x == 0.0));
        assert_eq!(g.b, vec![1.0, 0.0]);
        assert_eq!(g.diag, vec![1.0, 1.0]);
        let c = vec![0.6, 0.8];
        let dup = DenseMatrix::from_columns(&[c.clone(), c]).unwrap();
        let g = GramCache::new(&dup, &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(g.w.get(0, 1), 1.0, epsilon = 1e-15);
        assert_eq!(g.w.get(0, 1), g.w.get(1, 0));
    }

    #[test]
    fn gram_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
        let s: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = GramCache::new(&a, &s).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let brute = (0..4).fold(0.0, |acc, k| acc + a.get(k, i) * a.get(k, j));
                if i == j {
                    assert_eq!(g.w.get(i, j), 0.0);
                    assert_abs_diff_eq!(g.diag[i], brute, epsilon = 1e-14);
                } else {
                    assert_eq!(g.w.get(i, j), brute);
                    assert_eq!(g.w.get(i, j), g.w.get(j, i));
                }
            }
            let bi: f64 = (0..4).map(|k| a.get(k, i) * s[k]).sum();
            assert_abs_diff_eq!(g.b[i], bi, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn objective_non_negative(
            data in proptest::collection::vec(-3.0f64..3.0, 12),
            s in proptest::collection::vec(-3.0f64..3.0, 3),
            a in proptest::collection::vec(0.0f64..3.0, 4),
            kind in 0usize..5,
        ) {
            let pen = [
                Penalty::L1,
                Penalty::ElasticNet { rho: 0.3 },
                Penalty::Exp { gamma: 1.0 },
                Penalty::Log { theta: 1.0 },
                Penalty::Atan { eta: 1.0 },
            ][kind];
            let p = SensingProblem::new(
                DenseMatrix::new(3, 4, data).unwrap(), s, 0.1, pen, SignMode::Nonneg,
            ).unwrap();
            prop_assert!(p.objective(&a).unwrap() >= 0.0);
        }

        #[test]
        fn gram_symmetric_zero_diagonal(data in proptest::collection::vec(-3.0f64..3.0, 15)) {
            let a = DenseMatrix::new(3, 5, data).unwrap();
            let g = GramCache::new(&a, &[0.0; 3]).unwrap();
            for i in 0..5 {
                prop_assert_eq!(g.w.get(i, i), 0.0);
                for j in 0..5 {
                    prop_assert_eq!(g.w.get(i, j), g.w.get(j, i));
                }
            }
        }
    }
}
