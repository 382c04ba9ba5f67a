use crate::{Error, Result};

use super::ScalarSeries;

/// Consistency constant relating the MAD to a Gaussian standard deviation.
pub const HAMPEL_MAD_SCALE: f64 = 1.4826;

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_by(|a, b| a.total_cmp(b));
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Hampel outlier filter with a centered window of `window_s` seconds.
///
/// A sample is replaced by its window median when it deviates from it by
/// more than `threshold * 1.4826 * MAD`. Windows are truncated at the
/// series ends. With a zero MAD any nonzero deviation is replaced.
pub fn hampel(series: &ScalarSeries, window_s: f64, threshold: f64) -> Result<ScalarSeries> {
    let rate = series.sample_rate()?;
    let span = (window_s * rate).round() as usize;
    let half = span / 2;
    if half < 1 {
        return Err(Error::Domain(format!(
            "Hampel window of {window_s} s spans fewer than 3 samples at {rate} Hz"
        )));
    }
    let x = &series.values;
    let n = x.len();
    let mut buf = Vec::with_capacity(2 * half + 1);
    let mut dev = Vec::with_capacity(2 * half + 1);
    let out = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            buf.clear();
            buf.extend_from_slice(&x[lo..hi]);
            let med = median(&mut buf);
            dev.clear();
            dev.extend(x[lo..hi].iter().map(|v| (v - med).abs()));
            let mad = median(&mut dev);
            if (x[i] - med).abs() > threshold * HAMPEL_MAD_SCALE * mad {
                med
            } else {
                x[i]
            }
        })
        .collect();
    Ok(series.with_values(out))
}
