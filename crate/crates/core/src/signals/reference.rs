use serde::{Deserialize, Serialize};

use crate::track::Axis;
use crate::Result;

use super::{
    bandpass, detect_onset, g_to_ms2, hampel, integrate_to_displacement, remove_mean, resample,
    AccelRecord, DisplacementSeries, ScalarSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccelChannel {
    Ax,
    Ay,
    Az,
}

/// Parameters of the acceleration-to-displacement chain. One setting is
/// used for every record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    pub onset_window_s: f64,
    pub onset_threshold_factor: f64,
    pub hampel_window_s: f64,
    pub hampel_threshold: f64,
    pub filter_order: usize,
    pub band_hz: [f64; 2],
    pub target_rate_hz: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            onset_window_s: 1.0,
            onset_threshold_factor: 5.0,
            hampel_window_s: 0.75,
            hampel_threshold: 3.5,
            filter_order: 4,
            band_hz: [1.0, 10.0],
            target_rate_hz: 30.0,
        }
    }
}

/// Hampel -> mean removal -> band-pass -> double integration -> resample,
/// applied to the segment of `accel` (m/s^2) starting at `onset`.
pub fn displacement_chain(
    accel: &ScalarSeries,
    onset: f64,
    axis: Axis,
    cfg: &ReferenceConfig,
) -> Result<DisplacementSeries> {
    let start = accel.t.partition_point(|&t| t < onset);
    let segment = accel.tail(start.min(accel.len()));
    let cleaned = hampel(&segment, cfg.hampel_window_s, cfg.hampel_threshold)?;
    let centered = cleaned.with_values(remove_mean(&cleaned.values));
    let filtered = bandpass(&centered, cfg.filter_order, cfg.band_hz)?;
    let disp = integrate_to_displacement(&filtered, onset, axis)?;
    let resampled = resample(&disp.as_scalar(), cfg.target_rate_hz)?;
    Ok(DisplacementSeries {
        t: resampled.t,
        d: resampled.values,
        axis,
        onset: disp.onset,
    })
}

/// Full accelerometer reference for one channel: g -> m/s^2, onset from the
/// combined magnitude, then [`displacement_chain`].
pub fn derive_reference(
    raw: &AccelRecord,
    channel: AccelChannel,
    axis: Axis,
    cfg: &ReferenceConfig,
) -> Result<DisplacementSeries> {
    let ax = g_to_ms2(&raw.channel(AccelChannel::Ax))?;
    let ay = g_to_ms2(&raw.channel(AccelChannel::Ay))?;
    let az = g_to_ms2(&raw.channel(AccelChannel::Az))?;
    let onset = detect_onset(&ax, &ay, &az, cfg.onset_window_s, cfg.onset_threshold_factor)?;
    let selected = match channel {
        AccelChannel::Ax => ax,
        AccelChannel::Ay => ay,
        AccelChannel::Az => az,
    };
    displacement_chain(&selected, onset, axis, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Unit, STANDARD_GRAVITY};
    use crate::Error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    /// 3 s of sensor noise, then sinusoidal motion: lateral 2 mm at 1.8 Hz,
    /// vertical 5 mm at 3 Hz. Gravity on az.
    fn record(seed: u64, with_motion: bool) -> AccelRecord {
        let rate = 64.0;
        let n = (19.0 * rate) as usize + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 2e-4).unwrap();
        let t: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
        let motion = |amp_mm: f64, f: f64, t: f64| -> f64 {
            if !with_motion || t < 3.0 {
                return 0.0;
            }
            let w = 2.0 * PI * f;
            -amp_mm * 1e-3 * w * w * (w * (t - 3.0)).sin() / STANDARD_GRAVITY
        };
        let ax = t.iter().map(|&t| motion(2.0, 1.8, t) + noise.sample(&mut rng)).collect();
        let ay = t.iter().map(|&t| motion(5.0, 3.0, t) + noise.sample(&mut rng)).collect();
        let az = t.iter().map(|_| 1.0 + noise.sample(&mut rng)).collect();
        AccelRecord::new(t, ax, ay, az).unwrap()
    }

    /// Least-squares amplitude of the `f` Hz component (with offset and
    /// slope) over samples in `[from, to]`.
    fn tone_amplitude(d: &DisplacementSeries, f: f64, from: f64, to: f64) -> f64 {
        let mut ata = nalgebra::Matrix4::<f64>::zeros();
        let mut atb = nalgebra::Vector4::<f64>::zeros();
        for (&t, &v) in d.t.iter().zip(&d.d).filter(|(t, _)| (from..=to).contains(*t)) {
            let w = 2.0 * PI * f * t;
            let row = nalgebra::Vector4::new(w.sin(), w.cos(), 1.0, t);
            ata += row * row.transpose();
            atb += row * v;
        }
        let c = ata.lu().solve(&atb).unwrap();
        c[0].hypot(c[1])
    }

    #[test]
    fn sinusoidal_record_recovers_amplitudes() {
        let cfg = ReferenceConfig::default();
        let rec = record(1, true);
        let x = derive_reference(&rec, AccelChannel::Ax, Axis::X, &cfg).unwrap();
        let y = derive_reference(&rec, AccelChannel::Ay, Axis::Y, &cfg).unwrap();
        assert!((x.onset - 3.0).abs() < 1.0, "onset {}", x.onset);
        let (ax, ay) = (tone_amplitude(&x, 1.8, 4.0, 18.0), tone_amplitude(&y, 3.0, 4.0, 18.0));
        assert!((ax - 2.0).abs() < 0.1, "{ax}");
        assert!((ay - 5.0).abs() < 0.25, "{ay}");
        assert!(x.t.windows(2).all(|w| (w[1] - w[0] - 1.0 / 30.0).abs() < 1e-9));
    }

    #[test]
    fn quiescent_record_has_no_motion() {
        let cfg = ReferenceConfig::default();
        let res = derive_reference(&record(2, false), AccelChannel::Ay, Axis::Y, &cfg);
        assert!(matches!(res, Err(Error::NoMotion)));
    }

    #[test]
    fn chain_is_deterministic() {
        let cfg = ReferenceConfig::default();
        let rec = record(3, true);
        let a = derive_reference(&rec, AccelChannel::Ay, Axis::Y, &cfg).unwrap();
        let b = derive_reference(&rec, AccelChannel::Ay, Axis::Y, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_bias_does_not_drift() {
        let cfg = ReferenceConfig::default();
        let s = ScalarSeries::uniform(0.0, 64.0, vec![0.37; 16 * 64 + 1], Unit::MetersPerSecond2);
        let d = displacement_chain(&s, 0.0, Axis::Y, &cfg).unwrap();
        let drift = d.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(drift < 0.1, "drift {drift} mm");
    }
}
