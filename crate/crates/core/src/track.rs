//! Per-point pixel tracks and reconstructed trajectories.

use serde::{Deserialize, Serialize};

use crate::geometry::{PixelPoint, Point3};
use crate::{Error, Result};

/// Pixel trajectories of one view, stored `[point][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track2D {
    times: Vec<f64>,
    point_ids: Vec<u32>,
    pixels: Vec<Vec<PixelPoint>>,
}

impl Track2D {
    pub fn new(times: Vec<f64>, point_ids: Vec<u32>, pixels: Vec<Vec<PixelPoint>>) -> Result<Self> {
        if point_ids.len() != pixels.len() {
            return Err(Error::Contract(format!(
                "{} point ids for {} pixel tracks",
                point_ids.len(),
                pixels.len()
            )));
        }
        if let Some((i, row)) = pixels.iter().enumerate().find(|(_, r)| r.len() != times.len()) {
            return Err(Error::Contract(format!(
                "point {} has {} frames, expected {}",
                point_ids[i],
                row.len(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("frame times must be strictly increasing".into()));
        }
        Ok(Self {
            times,
            point_ids,
            pixels,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn point_ids(&self) -> &[u32] {
        &self.point_ids
    }

    pub fn n_frames(&self) -> usize {
        self.times.len()
    }

    pub fn n_points(&self) -> usize {
        self.point_ids.len()
    }

    /// All frames of point index `p`.
    pub fn point(&self, p: usize) -> &[PixelPoint] {
        &self.pixels[p]
    }

    pub fn points(&self) -> &[Vec<PixelPoint>] {
        &self.pixels
    }

    /// Copy with `offsets[p][t]` added to the horizontal coordinate only.
    pub fn with_horizontal_offsets(&self, offsets: &[Vec<f64>]) -> Result<Self> {
        self.check_shape(offsets)?;
        let pixels = self
            .pixels
            .iter()
            .zip(offsets)
            .map(|(row, du)| {
                row.iter()
                    .zip(du)
                    .map(|(p, d)| PixelPoint::new(p.u + d, p.v))
                    .collect()
            })
            .collect();
        Ok(Self {
            times: self.times.clone(),
            point_ids: self.point_ids.clone(),
            pixels,
        })
    }

    pub(crate) fn check_shape(&self, values: &[Vec<f64>]) -> Result<()> {
        if values.len() != self.n_points() || values.iter().any(|r| r.len() != self.n_frames()) {
            return Err(Error::Contract(format!(
                "correction shape does not match track shape ({} points x {} frames)",
                self.n_points(),
                self.n_frames()
            )));
        }
        Ok(())
    }
}

/// How a displacement series is referenced to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroReference {
    /// Per-point temporal mean position.
    #[default]
    Mean,
    FirstSample,
}

/// Structure-frame axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            other => Err(Error::Domain(format!("unknown axis `{other}` (expected X, Y or Z)"))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Structure-frame positions in meters, stored `[point][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory3D {
    pub times: Vec<f64>,
    pub point_ids: Vec<u32>,
    pub positions: Vec<Vec<Point3>>,
}

impl Trajectory3D {
    pub fn n_frames(&self) -> usize {
        self.times.len()
    }

    pub fn n_points(&self) -> usize {
        self.point_ids.len()
    }

    /// Displacement of point index `p` along `axis`, in millimeters.
    pub fn displacement_mm(&self, p: usize, axis: Axis, zero: ZeroReference) -> Vec<f64> {
        let values: Vec<f64> = self.positions[p].iter().map(|x| x[axis.index()]).collect();
        let origin = match zero {
            ZeroReference::Mean => values.iter().sum::<f64>() / values.len() as f64,
            ZeroReference::FirstSample => values[0],
        };
        values.iter().map(|v| (v - origin) * 1e3).collect()
    }
}
