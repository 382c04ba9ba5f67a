use crate::{Error, Result};

use super::{remove_mean, ScalarSeries};

/// Lag (seconds) maximizing the normalized cross-correlation of the
/// mean-removed series, refined by a parabola through the peak and its
/// neighbours.
///
/// A positive lag means `b` lags `a`: `b(t) ~ a(t - lag)`. The peak is taken
/// on `|rho|`; a negative correlation there is reported as
/// [`Error::AntiCorrelated`] rather than aligned.
pub fn synchronize(a: &ScalarSeries, b: &ScalarSeries, max_lag: f64) -> Result<f64> {
    let rate_a = a.sample_rate()?;
    let rate_b = b.sample_rate()?;
    if (rate_a - rate_b).abs() > 1e-6 * rate_a {
        return Err(Error::Contract(format!(
            "series rates differ: {rate_a} Hz vs {rate_b} Hz"
        )));
    }
    if !(max_lag >= 0.0) {
        return Err(Error::Domain(format!("max lag must be non-negative, got {max_lag}")));
    }
    let max_k = (max_lag * rate_a).round() as usize;
    let n = a.len().min(b.len());
    if n < 2 * max_k + 2 {
        return Err(Error::Domain(format!(
            "overlap of {n} samples is too short for a {max_lag} s lag search"
        )));
    }
    let xa = remove_mean(&a.values);
    let xb = remove_mean(&b.values);
    if xa.iter().all(|&v| v == 0.0) || xb.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("cannot synchronize a flat series".into()));
    }

    let corr = |k: isize| -> f64 {
        let (sa, sb) = if k >= 0 { (0, k as usize) } else { ((-k) as usize, 0) };
        let len = (xa.len() - sa).min(xb.len() - sb);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..len {
            let (p, q) = (xa[sa + i], xb[sb + i]);
            sab += p * q;
            saa += p * p;
            sbb += q * q;
        }
        if saa == 0.0 || sbb == 0.0 {
            0.0
        } else {
            sab / (saa.sqrt() * sbb.sqrt())
        }
    };

    let lags: Vec<isize> = (-(max_k as isize)..=max_k as isize).collect();
    let rho: Vec<f64> = lags.iter().map(|&k| corr(k)).collect();
    let (best, _) = rho
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r.abs() > acc.1 { (i, r.abs()) } else { acc });
    let peak = rho[best];
    if peak < 0.0 {
        return Err(Error::AntiCorrelated {
            rho: peak,
            lag_s: lags[best] as f64 / rate_a,
        });
    }
    let mut offset = 0.0;
    if best > 0 && best + 1 < rho.len() {
        let (l, c, r) = (rho[best - 1], rho[best], rho[best + 1]);
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok((lags[best] as f64 + offset) / rate_a)
}
