use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GroundTruth, LambdaSpec};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;

/// Ricker (Mexican hat) wavelet with peak frequency `f` centred at `t0`.
pub fn ricker(t: f64, f: f64, t0: f64) -> f64 {
    let x = (PI * f * (t - t0)).powi(2);
    (1.0 - 2.0 * x) * (-x).exp()
}

/// Dictionary whose column `c · freqs.len() + k` samples the wavelet with
/// frequency `freqs[k]` centred at `centers[c]` (centers-major order).
pub fn ricker_dictionary(sample_times: &[f64], freqs: &[f64], centers: &[f64]) -> Result<DenseMatrix> {
    if sample_times.is_empty() || freqs.is_empty() || centers.is_empty() {
        return Err(Error::InvalidParameter("ricker dictionary needs non-empty grids".into()));
    }
    if let Some(f) = freqs.iter().find(|f| !(**f > 0.0)) {
        return Err(Error::InvalidParameter(format!("ricker frequency must be > 0, got {f}")));
    }
    let pairs: Vec<(f64, f64)> = centers
        .iter()
        .flat_map(|&c| freqs.iter().map(move |&f| (f, c)))
        .collect();
    let mut seen = pairs.clone();
    seen.sort_by(|x, y| x.partial_cmp(y).expect("finite grid"));
    if seen.windows(2).any(|w| w[0] == w[1]) {
        log::warn!("ricker dictionary has repeated (frequency, center) pairs; columns are duplicated");
    }
    Ok(DenseMatrix::from_fn(sample_times.len(), pairs.len(), |i, j| {
        let (f, c) = pairs[j];
        ricker(sample_times[i], f, c)
    }))
}

/// Synthetic seismic trace: sparse reflectivity convolved through a Ricker
/// dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RickerSpec {
    pub samples: usize,
    /// Sampling interval in seconds.
    pub dt: f64,
    pub freq_count: usize,
    pub freq_lo: f64,
    pub freq_hi: f64,
    pub center_count: usize,
    pub k: usize,
    pub noise_sigma: f64,
    pub lambda: LambdaSpec,
    pub seed: u64,
    pub nonneg: bool,
}

impl Default for RickerSpec {
    fn default() -> Self {
        Self {
            samples: 256,
            dt: 0.002,
            freq_count: 4,
            freq_lo: 10.0,
            freq_hi: 40.0,
            center_count: 64,
            k: 3,
            noise_sigma: 0.01,
            lambda: LambdaSpec::Relative { factor: 0.05 },
            seed: 0,
            nonneg: false,
        }
    }
}

impl RickerSpec {
    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.samples).map(|i| i as f64 * self.dt).collect()
    }

    pub fn freqs(&self) -> Vec<f64> {
        linspace(self.freq_lo, self.freq_hi, self.freq_count)
    }

    /// Centers spread evenly over the recording.
    pub fn centers(&self) -> Vec<f64> {
        let span = self.samples.saturating_sub(1) as f64 * self.dt;
        (0..self.center_count)
            .map(|c| (c as f64 + 0.5) * span / self.center_count as f64)
            .collect()
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub fn ricker_trace(spec: &RickerSpec) -> Result<(SensingProblem, GroundTruth)> {
    let a = ricker_dictionary(&spec.sample_times(), &spec.freqs(), &spec.centers())?;
    let n = a.cols();
    if spec.k > n {
        return Err(Error::InvalidParameter(format!("k = {} exceeds {n} atoms", spec.k)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut support = sample(&mut rng, n, spec.k).into_vec();
    support.sort_unstable();
    let mut a_true = vec![0.0; n];
    for &i in &support {
        let v: f64 = rng.sample(StandardNormal);
        a_true[i] = if spec.nonneg { v.abs() } else { v };
    }
    let mut s = a.mul_vec(&a_true)?;
    for si in &mut s {
        *si += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
    }
    let lambda = spec.lambda.resolve(&a, &s)?;
    let mode = if spec.nonneg { SignMode::Nonneg } else { SignMode::Free };
    Ok((
        SensingProblem::new(a, s, lambda, Penalty::L1, mode)?,
        GroundTruth {
            a_true,
            noise_sigma: spec.noise_sigma,
            seed: spec.seed,
        },
    ))
}
