use crate::{Error, Result};

use super::ScalarSeries;

fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Motion onset from the rolling standard deviation of the combined
/// magnitude `sqrt(ax^2 + ay^2 + az^2)`.
///
/// The quiescent level is the median rolling std over windows lying inside
/// the first `2 * window_s` seconds. Returns the left edge of the first
/// window whose std exceeds `threshold_factor` times that level.
pub fn detect_onset(
    ax: &ScalarSeries,
    ay: &ScalarSeries,
    az: &ScalarSeries,
    window_s: f64,
    threshold_factor: f64,
) -> Result<f64> {
    let n = ax.len();
    if ay.len() != n || az.len() != n {
        return Err(Error::Contract("acceleration channels differ in length".into()));
    }
    let rate = ax.sample_rate()?;
    let w = (window_s * rate).round() as usize;
    if w < 2 {
        return Err(Error::Domain(format!(
            "onset window of {window_s} s spans fewer than 2 samples"
        )));
    }
    if n < 2 * w {
        return Err(Error::Domain(format!(
            "onset detection needs {} quiescent samples, record has {n}",
            2 * w
        )));
    }
    let magnitude: Vec<f64> = (0..n)
        .map(|i| (ax.values[i].powi(2) + ay.values[i].powi(2) + az.values[i].powi(2)).sqrt())
        .collect();
    let stds: Vec<f64> = magnitude.windows(w).map(population_std).collect();

    let mut quiet: Vec<f64> = stds[..=w.min(stds.len() - 1)].to_vec();
    quiet.sort_by(|a, b| a.total_cmp(b));
    let m = quiet.len();
    let level = if m % 2 == 1 {
        quiet[m / 2]
    } else {
        0.5 * (quiet[m / 2 - 1] + quiet[m / 2])
    };
    let threshold = threshold_factor * level;
    stds.iter()
        .position(|&s| s > threshold)
        .map(|i| ax.t[i])
        .ok_or(Error::NoMotion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Unit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn channels(values: Vec<f64>, rate: f64) -> (ScalarSeries, ScalarSeries, ScalarSeries) {
        let n = values.len();
        let x = ScalarSeries::uniform(0.0, rate, values, Unit::MetersPerSecond2);
        let y = ScalarSeries::uniform(0.0, rate, vec![0.0; n], Unit::MetersPerSecond2);
        let z = ScalarSeries::uniform(0.0, rate, vec![9.80665; n], Unit::MetersPerSecond2);
        (x, y, z)
    }

    fn noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn pure_noise_has_no_onset() {
        for seed in 0..10 {
            let (x, y, z) = channels(noise(1024, 0.01, seed), 64.0);
            assert!(matches!(detect_onset(&x, &y, &z, 1.0, 5.0), Err(Error::NoMotion)));
        }
    }

    #[test]
    fn step_in_noise_level_is_located() {
        let rate = 64.0;
        for seed in 0..10 {
            let mut v = noise(1024, 0.01, seed);
            for (i, x) in v.iter_mut().enumerate() {
                if i as f64 / rate >= 5.0 {
                    *x *= 10.0;
                }
            }
            let (x, y, z) = channels(v, rate);
            let onset = detect_onset(&x, &y, &z, 1.0, 5.0).unwrap();
            assert!((4.0..=6.0).contains(&onset), "onset {onset}");
        }
    }

    #[test]
    fn zero_factor_triggers_on_first_window() {
        let (x, y, z) = channels(noise(512, 0.01, 3), 64.0);
        assert_eq!(detect_onset(&x, &y, &z, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn short_record_is_rejected() {
        let (x, y, z) = channels(noise(100, 0.01, 1), 64.0);
        assert!(matches!(detect_onset(&x, &y, &z, 1.0, 5.0), Err(Error::Domain(_))));
    }
}
