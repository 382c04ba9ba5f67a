//! Agreement metrics between a predicted and a reference displacement series.
//!
//! All functions expect aligned, equal-length inputs; alignment lives in
//! [`crate::signals::synchronize`].

use serde::{Deserialize, Serialize};

use crate::track::Axis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub axis: Axis,
    pub nrmse_range: f64,
    pub correlation: f64,
    pub rppae: f64,
    pub n_samples: usize,
}

impl MetricReport {
    pub fn compute(axis: Axis, pred: &[f64], reference: &[f64]) -> Result<Self> {
        Ok(Self {
            axis,
            nrmse_range: nrmse_range(pred, reference)?,
            correlation: pearson_correlation(pred, reference)?,
            rppae: rppae(pred, reference)?,
            n_samples: pred.len(),
        })
    }
}

fn check_pair(pred: &[f64], reference: &[f64]) -> Result<()> {
    if pred.len() != reference.len() {
        return Err(Error::Contract(format!(
            "length mismatch: prediction {} vs reference {}",
            pred.len(),
            reference.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::Domain("at least two samples are required".into()));
    }
    if pred.iter().chain(reference).any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contain non-finite values".into()));
    }
    Ok(())
}

/// Global peak-to-peak amplitude, `max - min`.
pub fn peak_to_peak(d: &[f64]) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::Domain("peak-to-peak of an empty series".into()));
    }
    let (lo, hi) = d
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// RMSE divided by the reference's dynamic range.
pub fn nrmse_range(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(pred, reference)?;
    let range = peak_to_peak(reference)?;
    if range == 0.0 {
        return Err(Error::Domain("reference has zero dynamic range".into()));
    }
    let mse = pred
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r) * (p - r))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt() / range)
}

pub fn pearson_correlation(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(pred, reference)?;
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mr = reference.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, r) in pred.iter().zip(reference) {
        let (dp, dr) = (p - mp, r - mr);
        sxy += dp * dr;
        sxx += dp * dp;
        syy += dr * dr;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain("correlation undefined for zero-variance series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Relative peak-to-peak amplitude error of two series.
pub fn rppae(pred: &[f64], reference: &[f64]) -> Result<f64> {
    rppae_from_amplitudes(peak_to_peak(pred)?, peak_to_peak(reference)?)
}

/// `|A_pred - A_ref| / A_ref`.
pub fn rppae_from_amplitudes(a_pred: f64, a_ref: f64) -> Result<f64> {
    if !(a_ref > 0.0) || !a_ref.is_finite() || !a_pred.is_finite() {
        return Err(Error::Domain(format!(
            "reference amplitude must be positive and finite, got {a_ref}"
        )));
    }
    Ok((a_pred - a_ref).abs() / a_ref)
}

/// Rounds half away from zero at `decimals` places, the convention used
/// when comparing against tabulated two-decimal values.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}
