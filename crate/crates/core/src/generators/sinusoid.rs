use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{GroundTruth, LambdaSpec};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::metrics::r2;
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;

/// Spacing of the feature frequencies, in cycles per unit time. The lowest
/// features complete less than one cycle on the unit interval, so they are
/// strongly correlated, while the highest (10 cycles) stay well resolved by
/// a few dozen samples.
const FREQ_STEP: f64 = 0.1;

/// Sparse regression on superimposed sinusoids: only the lowest
/// `n_active` of `n_features` frequencies carry signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidTask {
    pub train_times: Vec<f64>,
    pub train_x: DenseMatrix,
    pub train_y: Vec<f64>,
    pub test_times: Vec<f64>,
    pub test_x: DenseMatrix,
    pub test_y: Vec<f64>,
    pub truth: GroundTruth,
}

impl SinusoidTask {
    pub fn problem(&self, lambda: LambdaSpec, penalty: Penalty, mode: SignMode) -> Result<SensingProblem> {
        let lambda = lambda.resolve(&self.train_x, &self.train_y)?;
        SensingProblem::new(self.train_x.clone(), self.train_y.clone(), lambda, penalty, mode)
    }

    pub fn train_r2(&self, coeffs: &[f64]) -> Result<f64> {
        r2(&self.train_y, &self.train_x.mul_vec(coeffs)?)
    }

    pub fn test_r2(&self, coeffs: &[f64]) -> Result<f64> {
        r2(&self.test_y, &self.test_x.mul_vec(coeffs)?)
    }
}

fn features(times: &[f64], n_features: usize) -> DenseMatrix {
    DenseMatrix::from_fn(times.len(), n_features, |i, k| {
        (2.0 * PI * FREQ_STEP * (k + 1) as f64 * times[i]).sin()
    })
}

/// Draws train and test times uniformly on `[0, 1]`, active amplitudes
/// uniformly in `[0.5, 1.5]`, and adds `N(0, σ²)` noise to both targets.
pub fn sinusoid_regression(
    n_features: usize,
    n_train: usize,
    n_test: usize,
    n_active: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SinusoidTask> {
    if n_features == 0 || n_train == 0 || n_test == 0 || n_active > n_features {
        return Err(Error::InvalidParameter(format!(
            "invalid sinusoid task sizes: {n_features} features, {n_active} active, {n_train} train, {n_test} test"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a_true = vec![0.0; n_features];
    for a in a_true.iter_mut().take(n_active) {
        *a = rng.random_range(0.5..1.5);
    }
    let mut draw = |count: usize| -> (Vec<f64>, DenseMatrix, Vec<f64>) {
        let times: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        let x = features(&times, n_features);
        let mut y = x.mul_vec(&a_true).expect("matching sizes");
        for yi in &mut y {
            *yi += noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        (times, x, y)
    };
    let (train_times, train_x, train_y) = draw(n_train);
    let (test_times, test_x, test_y) = draw(n_test);
    Ok(SinusoidTask {
        train_times,
        train_x,
        train_y,
        test_times,
        test_x,
        test_y,
        truth: GroundTruth {
            a_true,
            noise_sigma,
            seed,
        },
    })
}
