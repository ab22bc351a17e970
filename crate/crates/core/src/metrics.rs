//! Reconstruction metrics in decibels.
//!
//! Perfect reconstructions are reported as infinities rather than errors
//! (`nmse = −∞`, `snr = psnr = +∞`) so metric traces stay plottable.

use crate::error::{ensure_len, Error, Result};

fn squared_error(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    ensure_len("estimate", reference.len(), estimate.len())?;
    Ok(reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (e - r) * (e - r))
        .sum())
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `10 log₁₀(‖est − ref‖² / ‖ref‖²)`; `−∞` when `est == ref`.
pub fn nmse(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    let err = squared_error(reference, estimate)?;
    let e = energy(reference);
    if e == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(10.0 * (err / e).log10())
}

/// `10 log₁₀(‖ref‖² / ‖ref − est‖²)`; `+∞` when `est == ref`.
pub fn snr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    let err = squared_error(reference, estimate)?;
    let e = energy(reference);
    if e == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(10.0 * (e / err).log10())
}

/// `10 log₁₀(peak² n / ‖ref − est‖²)` over the flattened images.
pub fn psnr(reference: &[f64], estimate: &[f64], peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("peak must be > 0, got {peak}")));
    }
    let err = squared_error(reference, estimate)?;
    Ok(10.0 * (peak * peak * reference.len() as f64 / err).log10())
}

/// Coefficient of determination `1 − SS_res / SS_tot`. A constant target
/// gives `1` for an exact fit and `−∞` otherwise.
pub fn r2(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    let ss_res = squared_error(y, y_hat)?;
    if y.is_empty() {
        return Err(Error::InvalidParameter("r2 of an empty vector".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY });
    }
    Ok(1.0 - ss_res / ss_tot)
}
