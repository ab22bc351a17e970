//! Seeded synthetic instances. Every generator is a pure function of its
//! parameters and seed (ChaCha8 streams, so outputs are identical across
//! platforms).

mod image;
mod instance;
mod seismic;
mod sinusoid;
mod wavelet;

pub use image::{cs_image_problem, image_from_coeffs, phantom, CsImage, MAX_IMAGE_SIDE};
pub use instance::{load_instance, save_instance, Instance};
pub use seismic::{ricker, ricker_dictionary, ricker_trace, RickerSpec};
pub use sinusoid::{sinusoid_regression, SinusoidTask};
pub use wavelet::{dwt2, idwt2, Wavelet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::penalty::{Penalty, SignMode};
use crate::problem::{lambda_max, SensingProblem};

/// How the regularization weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaSpec {
    Absolute { value: f64 },
    /// `factor · ‖Aᵀs‖∞`.
    Relative { factor: f64 },
}

impl LambdaSpec {
    pub fn resolve(&self, a: &DenseMatrix, s: &[f64]) -> Result<f64> {
        let value = match *self {
            LambdaSpec::Absolute { value } => value,
            LambdaSpec::Relative { factor } => factor * lambda_max(a, s),
        };
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InvalidParameter(format!("{self:?} gives lambda = {value}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub a_true: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn sparsity(&self) -> usize {
        self.a_true.iter().filter(|&&x| x != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_sigma: f64,
    pub lambda: LambdaSpec,
    pub seed: u64,
    pub nonneg: bool,
    pub normalize_cols: bool,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            m: 32,
            n: 64,
            k: 5,
            noise_sigma: 0.01,
            lambda: LambdaSpec::Relative { factor: 0.1 },
            seed: 0,
            nonneg: true,
            normalize_cols: false,
        }
    }
}

/// Compressed-sensing instance with a standard normal matrix and a
/// `k`-sparse truth. Draw order: `A` row-major, support, magnitudes, noise.
pub fn gaussian_problem(spec: &GaussianSpec) -> Result<(SensingProblem, GroundTruth)> {
    let GaussianSpec { m, n, k, .. } = *spec;
    if m == 0 || n == 0 || k > n || m > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 < m <= n and k <= n, got m = {m}, n = {n}, k = {k}"
        )));
    }
    if !(spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut a = DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    if spec.normalize_cols {
        a = a.normalize_columns().0;
    }
    let mut support = sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut a_true = vec![0.0; n];
    for &i in &support {
        let v: f64 = rng.sample(StandardNormal);
        a_true[i] = if spec.nonneg { v.abs() } else { v };
    }
    let mut s = a.mul_vec(&a_true)?;
    if spec.noise_sigma > 0.0 {
        for si in &mut s {
            *si += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let lambda = spec.lambda.resolve(&a, &s)?;
    let mode = if spec.nonneg { SignMode::Nonneg } else { SignMode::Free };
    let problem = SensingProblem::new(a, s, lambda, Penalty::L1, mode)?;
    Ok((
        problem,
        GroundTruth {
            a_true,
            noise_sigma: spec.noise_sigma,
            seed: spec.seed,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{fista, ProxSolverConfig};

    #[test]
    fn noiseless_observation_is_exact() {
        let spec = GaussianSpec {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let (p, truth) = gaussian_problem(&spec).unwrap();
        assert_eq!(p.observation(), p.matrix().mul_vec(&truth.a_true).unwrap().as_slice());
        assert_eq!(truth.sparsity(), 5);
        assert!(truth.a_true.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn same_seed_same_instance() {
        let spec = GaussianSpec {
            seed: 11,
            nonneg: false,
            ..Default::default()
        };
        let (p, t) = gaussian_problem(&spec).unwrap();
        let (q, u) = gaussian_problem(&spec).unwrap();
        assert_eq!(p.matrix(), q.matrix());
        assert_eq!(p.observation(), q.observation());
        assert_eq!(t, u);
        let (r, _) = gaussian_problem(&GaussianSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(p.matrix(), r.matrix());
    }

    #[test]
    fn noise_only_instance_solves_to_zero() {
        let spec = GaussianSpec {
            k: 0,
            lambda: LambdaSpec::Relative { factor: 1.0 },
            ..Default::default()
        };
        let (p, _) = gaussian_problem(&spec).unwrap();
        let tr = fista(&p, &ProxSolverConfig::default()).unwrap();
        assert!(tr.solution().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn normalized_columns_have_unit_norm() {
        let spec = GaussianSpec {
            normalize_cols: true,
            ..Default::default()
        };
        let (p, _) = gaussian_problem(&spec).unwrap();
        for norm in p.matrix().column_norms() {
            assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        for (m, n, k) in [(0, 4, 1), (5, 4, 1), (2, 4, 5)] {
            let spec = GaussianSpec {
                m,
                n,
                k,
                ..Default::default()
            };
            assert!(gaussian_problem(&spec).is_err());
        }
    }
}
