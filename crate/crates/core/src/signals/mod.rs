//! Accelerometer reference chain and response-based synchronization.

mod butterworth;
mod hampel;
mod integrate;
mod onset;
mod reference;
mod resample;
mod sync;

use serde::{Deserialize, Serialize};

use crate::track::Axis;
use crate::{Error, Result};

pub use butterworth::{bandpass, Biquad, ButterworthBandpass};
pub use hampel::{hampel, HAMPEL_MAD_SCALE};
pub use integrate::{cumulative_trapezoid, detrend_linear, integrate_to_displacement};
pub use onset::detect_onset;
pub use reference::{derive_reference, displacement_chain, AccelChannel, ReferenceConfig};
pub use resample::{interpolate, resample};
pub use sync::synchronize;

/// Standard gravity, m/s^2 per g.
pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    G,
    MetersPerSecond2,
    MetersPerSecond,
    Millimeters,
}

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub unit: Unit,
}

impl ScalarSeries {
    pub fn new(t: Vec<f64>, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::Contract(format!(
                "{} time stamps for {} values",
                t.len(),
                values.len()
            )));
        }
        if values.iter().chain(&t).any(|v| !v.is_finite()) {
            return Err(Error::Domain("series contains non-finite values".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("time stamps must be strictly increasing".into()));
        }
        Ok(Self { t, values, unit })
    }

    /// Series sampled at `rate` Hz starting at `t0`.
    pub fn uniform(t0: f64, rate: f64, values: Vec<f64>, unit: Unit) -> Self {
        let t = (0..values.len()).map(|i| t0 + i as f64 / rate).collect();
        Self { t, values, unit }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean sampling rate in Hz.
    pub fn sample_rate(&self) -> Result<f64> {
        if self.t.len() < 2 {
            return Err(Error::Domain("sampling rate needs at least two samples".into()));
        }
        Ok((self.t.len() - 1) as f64 / (self.t[self.t.len() - 1] - self.t[0]))
    }

    pub fn duration(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            t: self.t.clone(),
            values,
            unit: self.unit,
        }
    }

    /// Samples from index `start` on.
    pub fn tail(&self, start: usize) -> Self {
        Self {
            t: self.t[start..].to_vec(),
            values: self.values[start..].to_vec(),
            unit: self.unit,
        }
    }
}

/// Converts an acceleration series from g to m/s^2.
pub fn g_to_ms2(series: &ScalarSeries) -> Result<ScalarSeries> {
    if series.unit != Unit::G {
        return Err(Error::Contract(format!("expected a series in g, got {:?}", series.unit)));
    }
    let mut out = series.with_values(series.values.iter().map(|v| v * STANDARD_GRAVITY).collect());
    out.unit = Unit::MetersPerSecond2;
    Ok(out)
}

/// Subtracts the sample mean.
pub fn remove_mean(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - mean).collect()
}

/// Tri-axial accelerometer record, accelerations in g.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelRecord {
    pub t: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub az: Vec<f64>,
}

impl AccelRecord {
    /// Checks equal lengths, finiteness and uniform sampling (each step
    /// within 1% of the mean step).
    pub fn new(t: Vec<f64>, ax: Vec<f64>, ay: Vec<f64>, az: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if ax.len() != n || ay.len() != n || az.len() != n {
            return Err(Error::Contract("accelerometer columns differ in length".into()));
        }
        if n < 2 {
            return Err(Error::Domain("accelerometer record needs at least two samples".into()));
        }
        if t.iter().chain(&ax).chain(&ay).chain(&az).any(|v| !v.is_finite()) {
            return Err(Error::Domain("accelerometer record contains non-finite values".into()));
        }
        let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::Domain("time stamps must be strictly increasing".into()));
        }
        if let Some(i) = t.windows(2).position(|w| ((w[1] - w[0]) - dt).abs() > 0.01 * dt) {
            return Err(Error::Domain(format!(
                "non-uniform sampling at sample {}: step {} vs nominal {}",
                i + 1,
                t[i + 1] - t[i],
                dt
            )));
        }
        Ok(Self { t, ax, ay, az })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel(&self, channel: AccelChannel) -> ScalarSeries {
        let values = match channel {
            AccelChannel::Ax => &self.ax,
            AccelChannel::Ay => &self.ay,
            AccelChannel::Az => &self.az,
        };
        ScalarSeries {
            t: self.t.clone(),
            values: values.clone(),
            unit: Unit::G,
        }
    }
}

/// Displacement along one structure axis in millimeters, defined from
/// `onset` on.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSeries {
    pub t: Vec<f64>,
    pub d: Vec<f64>,
    pub axis: Axis,
    pub onset: f64,
}

impl DisplacementSeries {
    pub fn as_scalar(&self) -> ScalarSeries {
        ScalarSeries {
            t: self.t.clone(),
            values: self.d.clone(),
            unit: Unit::Millimeters,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gravity_conversion() {
        let s = ScalarSeries::uniform(0.0, 1.0, vec![1.0, 0.0, -2.0], Unit::G);
        let out = g_to_ms2(&s).unwrap();
        assert_eq!(out.values, vec![9.80665, 0.0, -19.6133]);
        assert_eq!(out.unit, Unit::MetersPerSecond2);
        assert!(g_to_ms2(&out).is_err());
    }

    #[test]
    fn accel_record_rejects_jitter() {
        let t = vec![0.0, 1.0, 2.0, 3.05, 4.0];
        let z = vec![0.0; 5];
        assert!(AccelRecord::new(t, z.clone(), z.clone(), z.clone()).is_err());
        let t = vec![0.0, 1.0, 2.0, 3.005, 4.0];
        assert!(AccelRecord::new(t, z.clone(), z.clone(), z).is_ok());
    }
}
