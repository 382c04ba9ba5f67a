use crate::{Error, Result};

use super::ScalarSeries;

/// Linear interpolation onto a uniform `target_rate` grid starting at the
/// first sample and spanning the source interval.
pub fn resample(series: &ScalarSeries, target_rate: f64) -> Result<ScalarSeries> {
    if series.is_empty() {
        return Err(Error::Domain("cannot resample an empty series".into()));
    }
    if !(target_rate > 0.0) || !target_rate.is_finite() {
        return Err(Error::Domain(format!("invalid target rate {target_rate}")));
    }
    let t0 = series.t[0];
    let span = series.duration();
    let n = (span * target_rate + 1e-9).floor() as usize + 1;
    let t: Vec<f64> = (0..n).map(|k| t0 + k as f64 / target_rate).collect();
    let values = t.iter().map(|&tk| interpolate(series, tk)).collect();
    Ok(ScalarSeries {
        t,
        values,
        unit: series.unit,
    })
}

/// Piecewise-linear value at `tq`, clamped to the end samples.
pub fn interpolate(series: &ScalarSeries, tq: f64) -> f64 {
    let t = &series.t;
    let v = &series.values;
    let n = t.len();
    if tq <= t[0] || n == 1 {
        return v[0];
    }
    if tq >= t[n - 1] {
        return v[n - 1];
    }
    let i = t.partition_point(|&x| x <= tq);
    let (ta, tb) = (t[i - 1], t[i]);
    let w = (tq - ta) / (tb - ta);
    v[i - 1] + w * (v[i] - v[i - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Unit;
    use std::f64::consts::PI;

    #[test]
    fn grid_size_64_to_30() {
        let s = ScalarSeries::uniform(0.0, 64.0, vec![0.0; 16 * 64 + 1], Unit::Millimeters);
        let r = resample(&s, 30.0).unwrap();
        assert_eq!(r.len(), 481);
        assert_eq!(r.t[0], 0.0);
        assert!((r.t[480] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_is_exact() {
        let s = ScalarSeries::uniform(0.5, 64.0, (0..300).map(|i| 2.0 * i as f64 - 7.0).collect(), Unit::Millimeters);
        let r = resample(&s, 30.0).unwrap();
        for (t, v) in r.t.iter().zip(&r.values) {
            let expected = 2.0 * (t - 0.5) * 64.0 - 7.0;
            assert!((v - expected).abs() < 1e-9, "{t}: {v} vs {expected}");
        }
    }

    #[test]
    fn sinusoid_amplitude_preserved() {
        let rate = 64.0;
        let v = (0..=16 * 64).map(|i| (2.0 * PI * 3.0 * i as f64 / rate).sin()).collect();
        let r = resample(&ScalarSeries::uniform(0.0, rate, v, Unit::Millimeters), 30.0).unwrap();
        // 3 Hz sampled at 30 Hz: the grid does not hit every crest, compare
        // against the exact sinusoid on the same grid instead
        let worst = r
            .t
            .iter()
            .zip(&r.values)
            .map(|(t, v)| (v - (2.0 * PI * 3.0 * t).sin()).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 0.01, "worst {worst}");
        let amp = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let grid_amp = r.t.iter().map(|t| (2.0 * PI * 3.0 * t).sin().abs()).fold(0.0, f64::max);
        assert!((amp - grid_amp).abs() < 0.01 * grid_amp);
    }

    #[test]
    fn duration_preserved_within_one_step() {
        let s = ScalarSeries::uniform(1.0, 64.0, vec![0.0; 777], Unit::Millimeters);
        let r = resample(&s, 30.0).unwrap();
        assert!((s.duration() - r.duration()).abs() < 1.0 / 30.0);
        assert!(r.duration() <= s.duration());
    }

    #[test]
    fn empty_series_is_rejected() {
        let s = ScalarSeries::uniform(0.0, 64.0, vec![], Unit::Millimeters);
        assert!(resample(&s, 30.0).is_err());
    }
}
