use std::f64::consts::PI;

use nalgebra::Complex;

use crate::{Error, Result};

use super::{remove_mean, ScalarSeries};

/// Second-order section `b0 + b1 z^-1 + b2 z^-2 / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Complex response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex<f64> {
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = z1 * self.b[1] + z2 * self.b[2] + self.b[0];
        let den = z1 * self.a[0] + z2 * self.a[1] + 1.0;
        num / den
    }

    /// Steady-state transposed direct-form-II state for a unit step.
    fn step_state(&self) -> [f64; 2] {
        let gain = self.dc_gain();
        [gain - self.b[0], self.b[2] - self.a[1] * gain]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }
}

/// Digital Butterworth band-pass as a cascade of biquads.
///
/// `order` is the order of the low-pass prototype, so the band-pass has
/// `2 * order` poles and `order` sections. Designed by bilinear transform of
/// the prewarped analog band-pass; each section holds one conjugate pole
/// pair and the zeros at `z = 1` and `z = -1`, scaled to unit gain at the
/// band center.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthBandpass {
    sections: Vec<Biquad>,
}

impl ButterworthBandpass {
    pub fn design(order: usize, low_hz: f64, high_hz: f64, rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("filter order must be at least 1".into()));
        }
        let nyquist = rate_hz / 2.0;
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
            return Err(Error::Domain(format!(
                "band [{low_hz}, {high_hz}] Hz must lie inside (0, {nyquist}) Hz"
            )));
        }
        let fs2 = 2.0 * rate_hz;
        let wl = fs2 * (PI * low_hz / rate_hz).tan();
        let wh = fs2 * (PI * high_hz / rate_hz).tan();
        let bw = wh - wl;
        let w0_sq = wl * wh;
        let center = 2.0 * (w0_sq.sqrt() / fs2).atan();

        let n = order as f64;
        let mut sections = Vec::with_capacity(order);
        for k in 0..order {
            let proto = Complex::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n));
            let half = proto * (bw / 2.0);
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                // keep one pole of each conjugate pair
                if s.im <= 0.0 {
                    continue;
                }
                let z = (s + fs2) / (-s + fs2);
                let mut section = Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [-2.0 * z.re, z.norm_sqr()],
                };
                let g = section.response(center).norm();
                for c in &mut section.b {
                    *c /= g;
                }
                sections.push(section);
            }
        }
        if sections.len() != order {
            return Err(Error::Domain(format!(
                "band [{low_hz}, {high_hz}] Hz produced real poles; widen or move the band"
            )));
        }
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / rate_hz;
        self.sections.iter().map(|s| s.response(w).norm()).product()
    }

    /// Causal filtering with explicit initial section states.
    fn run(&self, x: &[f64], mut state: Vec<[f64; 2]>) -> Vec<f64> {
        let mut y = x.to_vec();
        for (sec, z) in self.sections.iter().zip(state.iter_mut()) {
            for v in y.iter_mut() {
                let input = *v;
                let out = sec.b[0] * input + z[0];
                z[0] = sec.b[1] * input - sec.a[0] * out + z[1];
                z[1] = sec.b[2] * input - sec.a[1] * out;
                *v = out;
            }
        }
        y
    }

    /// Initial states that put the cascade in steady state for a constant
    /// input `x0`.
    fn steady_state(&self, x0: f64) -> Vec<[f64; 2]> {
        let mut scale = x0;
        self.sections
            .iter()
            .map(|s| {
                let [a, b] = s.step_state();
                let z = [a * scale, b * scale];
                scale *= s.dc_gain();
                z
            })
            .collect()
    }

    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Zero-phase forward-backward filtering with odd-extension padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        let n = x.len();
        if n <= pad {
            return Err(Error::Domain(format!(
                "zero-phase filtering needs more than {pad} samples, got {n}"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let forward = self.run(&ext, self.steady_state(ext[0]));
        let mut rev: Vec<f64> = forward.into_iter().rev().collect();
        rev = self.run(&rev, self.steady_state(rev[0]));
        rev.reverse();
        Ok(rev[pad..pad + n].to_vec())
    }
}

/// Mean removal followed by a zero-phase Butterworth band-pass.
pub fn bandpass(series: &ScalarSeries, order: usize, band: [f64; 2]) -> Result<ScalarSeries> {
    let rate = series.sample_rate()?;
    let filter = ButterworthBandpass::design(order, band[0], band[1], rate)?;
    let centered = remove_mean(&series.values);
    Ok(series.with_values(filter.filtfilt(&centered)?))
}
