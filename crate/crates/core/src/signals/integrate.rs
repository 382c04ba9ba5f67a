use crate::track::Axis;
use crate::{Error, Result};

use super::{DisplacementSeries, ScalarSeries, Unit};

/// Cumulative trapezoidal integral with zero initial value.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    if !y.is_empty() {
        out.push(0.0);
    }
    for i in 1..y.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
        out.push(acc);
    }
    out
}

/// Removes the least-squares straight line from `y(t)`.
pub fn detrend_linear(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    if y.len() < 2 {
        return vec![0.0; y.len()];
    }
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        stt += (ti - mt) * (ti - mt);
        sty += (ti - mt) * (yi - my);
    }
    let slope = sty / stt;
    t.iter()
        .zip(y)
        .map(|(ti, yi)| yi - my - slope * (ti - mt))
        .collect()
}

/// Double trapezoidal integration of an acceleration series (m/s^2) from
/// `onset`, with zero initial velocity and displacement. The velocity is
/// linearly detrended before the second integration. Output in mm.
pub fn integrate_to_displacement(
    accel: &ScalarSeries,
    onset: f64,
    axis: Axis,
) -> Result<DisplacementSeries> {
    if accel.unit != Unit::MetersPerSecond2 {
        return Err(Error::Contract(format!(
            "expected acceleration in m/s^2, got {:?}",
            accel.unit
        )));
    }
    let start = accel.t.partition_point(|&t| t < onset);
    if accel.len().saturating_sub(start) < 2 {
        return Err(Error::Domain(format!(
            "fewer than 2 samples after onset {onset} s"
        )));
    }
    let t = &accel.t[start..];
    let a = &accel.values[start..];
    let velocity = detrend_linear(t, &cumulative_trapezoid(t, a));
    let d = cumulative_trapezoid(t, &velocity)
        .into_iter()
        .map(|x| x * 1e3)
        .collect();
    Ok(DisplacementSeries {
        t: t.to_vec(),
        d,
        axis,
        onset: t[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_acceleration_matches_closed_form() {
        // a(t) = c0 + c1 t + c2 t^2 -> x(t) = c0 t^2/2 + c1 t^3/6 + c2 t^4/12
        let (c0, c1, c2) = (0.3, -0.2, 0.05);
        let exact = |t: f64| c0 * t * t / 2.0 + c1 * t.powi(3) / 6.0 + c2 * t.powi(4) / 12.0;
        let mut errors = Vec::new();
        for &n in &[100usize, 200, 400] {
            let dt = 4.0 / n as f64;
            let t: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
            let a: Vec<f64> = t.iter().map(|&t| c0 + c1 * t + c2 * t * t).collect();
            let x = cumulative_trapezoid(&t, &cumulative_trapezoid(&t, &a));
            let err = (x[n] - exact(4.0)).abs();
            errors.push(err);
            assert!(err < 2.0 * dt * dt, "n={n} err={err}");
        }
        // second-order convergence
        assert!((errors[0] / errors[1] - 4.0).abs() < 0.2);
        assert!((errors[1] / errors[2] - 4.0).abs() < 0.2);
    }

    #[test]
    fn sinusoid_amplitude() {
        let rate = 64.0;
        let f = 3.0;
        let n = (16.0 * rate) as usize;
        let a: Vec<f64> = (0..=n).map(|i| (2.0 * PI * f * i as f64 / rate).sin()).collect();
        let s = ScalarSeries::uniform(0.0, rate, a, Unit::MetersPerSecond2);
        let d = integrate_to_displacement(&s, 0.0, Axis::Y).unwrap();
        // continuous amplitude times the trapezoid rule's gain, squared
        let half = PI * f / rate;
        let expected = 1e3 / (2.0 * PI * f).powi(2) * (half / half.tan()).powi(2);
        // slow drift survives double integration; measure the 3 Hz component
        let x = detrend_linear(&d.t, &d.d);
        let n = x.len() as f64;
        let (mut ps, mut pc) = (0.0, 0.0);
        for (t, v) in d.t.iter().zip(&x) {
            ps += v * (2.0 * PI * f * t).sin();
            pc += v * (2.0 * PI * f * t).cos();
        }
        let amp = 2.0 / n * ps.hypot(pc);
        assert!((amp - expected).abs() < 2e-3 * expected, "{amp} vs {expected}");
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let s = ScalarSeries::uniform(0.0, 64.0, vec![0.0; 100], Unit::MetersPerSecond2);
        let d = integrate_to_displacement(&s, 0.0, Axis::X).unwrap();
        assert!(d.d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn starts_at_onset() {
        let s = ScalarSeries::uniform(0.0, 10.0, vec![1.0; 50], Unit::MetersPerSecond2);
        let d = integrate_to_displacement(&s, 2.0, Axis::X).unwrap();
        assert_eq!(d.t.len(), 30);
        assert!((d.onset - 2.0).abs() < 1e-12);
        assert_eq!(d.d[0], 0.0);
        assert!(integrate_to_displacement(&s, 4.95, Axis::X).is_err());
    }
}
