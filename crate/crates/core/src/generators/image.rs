use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{dwt2, idwt2, GroundTruth, LambdaSpec, Wavelet};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;

/// Largest image side accepted by [`cs_image_problem`]; the dense sensing
/// matrix has `ratio · side⁴` entries.
pub const MAX_IMAGE_SIDE: usize = 64;

/// `(center x, center y, semi-axis x, semi-axis y, rotation, intensity)`
/// in the unit square `[−1, 1]²`, head-like.
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 7] = [
    (0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
    (0.22, 0.0, 0.11, 0.31, -0.314, -0.2),
    (-0.22, 0.0, 0.16, 0.41, 0.314, -0.2),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
    (0.0, -0.605, 0.046, 0.023, 0.0, 0.1),
];

/// Piecewise-constant ellipse phantom with intensities in `[0, 1]`.
pub fn phantom(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |r, c| {
        let x = (2.0 * c as f64 + 1.0) / n as f64 - 1.0;
        let y = 1.0 - (2.0 * r as f64 + 1.0) / n as f64;
        let v: f64 = ELLIPSES
            .iter()
            .filter(|(cx, cy, ax, ay, rot, _)| {
                let (sn, cs) = rot.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = (dx * cs + dy * sn) / ax;
                let w = (-dx * sn + dy * cs) / ay;
                u * u + w * w <= 1.0
            })
            .map(|e| e.5)
            .sum();
        v.clamp(0.0, 1.0)
    })
}

/// Compressed-sensing image instance. Unknowns are the wavelet
/// coefficients (row-major), so `A = Φ Ψ` with `Ψ` the synthesis operator.
#[derive(Debug, Clone)]
pub struct CsImage {
    pub problem: SensingProblem,
    pub truth: GroundTruth,
    pub side: usize,
    pub levels: usize,
    pub wavelet: Wavelet,
    /// Measurement matrix acting on pixels.
    pub measurement: DenseMatrix,
}

impl CsImage {
    pub fn image(&self, coeffs: &[f64]) -> Result<DenseMatrix> {
        image_from_coeffs(coeffs, self.side, self.levels, self.wavelet)
    }
}

pub fn image_from_coeffs(coeffs: &[f64], side: usize, levels: usize, wavelet: Wavelet) -> Result<DenseMatrix> {
    idwt2(&DenseMatrix::new(side, side, coeffs.to_vec())?, levels, wavelet)
}

/// `Φ` has `round(ratio · n²)` rows of i.i.d. `N(0, 1/M)` entries. Since
/// `Ψ` is orthonormal, row `i` of `Φ Ψ` is the analysis transform of row
/// `i` of `Φ`.
pub fn cs_image_problem(
    image: &DenseMatrix,
    ratio: f64,
    wavelet: Wavelet,
    levels: usize,
    lambda: LambdaSpec,
    seed: u64,
) -> Result<CsImage> {
    let (side, cols) = image.shape();
    if side != cols {
        return Err(Error::InvalidParameter("image must be square".into()));
    }
    if side > MAX_IMAGE_SIDE {
        return Err(Error::InvalidParameter(format!(
            "image side {side} exceeds the limit of {MAX_IMAGE_SIDE}"
        )));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!("undersampling ratio must lie in (0, 1], got {ratio}")));
    }
    let pixels = side * side;
    let m = ((ratio * pixels as f64).round() as usize).max(1);
    let coeffs = dwt2(image, levels, wavelet)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let phi = DenseMatrix::from_fn(m, pixels, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let mut a = DenseMatrix::zeros(m, pixels);
    for i in 0..m {
        let row = DenseMatrix::new(side, side, phi.row(i).to_vec())?;
        a.row_mut(i).copy_from_slice(dwt2(&row, levels, wavelet)?.data());
    }
    let s = phi.mul_vec(image.data())?;
    let lambda = lambda.resolve(&a, &s)?;
    Ok(CsImage {
        problem: SensingProblem::new(a, s, lambda, Penalty::L1, SignMode::Free)?,
        truth: GroundTruth {
            a_true: coeffs.into_data(),
            noise_sigma: 0.0,
            seed,
        },
        side,
        levels,
        wavelet,
        measurement: phi,
    })
}
