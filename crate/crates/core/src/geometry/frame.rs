use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{ensure_finite_point, Point3};

/// Sign of the structure-frame vertical axis relative to camera `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum VerticalSign {
    /// Positive Y points downward (camera `y` convention).
    Down,
    Up,
}

impl VerticalSign {
    pub fn value(self) -> f64 {
        match self {
            VerticalSign::Down => 1.0,
            VerticalSign::Up => -1.0,
        }
    }
}

impl Default for VerticalSign {
    fn default() -> Self {
        VerticalSign::Down
    }
}

impl From<VerticalSign> for i8 {
    fn from(s: VerticalSign) -> i8 {
        match s {
            VerticalSign::Down => 1,
            VerticalSign::Up => -1,
        }
    }
}

impl TryFrom<i8> for VerticalSign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(VerticalSign::Down),
            -1 => Ok(VerticalSign::Up),
            other => Err(format!("vertical_sign must be +1 or -1, got {other}")),
        }
    }
}

/// Orientation of the structure frame (X lateral, Y vertical, Z longitudinal)
/// relative to the reference camera.
///
/// Pitch and roll of the reference camera are taken as zero (leveled
/// tripod), so only a yaw about the vertical axis remains. `yaw` is the
/// horizontal angle between the optical axis and the bridge normal:
/// at `yaw = 0` the optical axis is the lateral axis and the camera's
/// horizontal image axis is the longitudinal axis. Positive yaw turns the
/// optical axis toward +Z (the far bridge end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureFrame {
    yaw: f64,
    vertical_sign: VerticalSign,
}

impl StructureFrame {
    pub fn new(yaw: f64, vertical_sign: VerticalSign) -> Result<Self> {
        if !yaw.is_finite() || yaw <= -std::f64::consts::PI || yaw > std::f64::consts::PI {
            return Err(Error::Domain(format!("yaw {yaw} outside (-pi, pi]")));
        }
        Ok(Self { yaw, vertical_sign })
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn vertical_sign(&self) -> VerticalSign {
        self.vertical_sign
    }

    /// Matrix mapping camera-frame coordinates to structure-frame
    /// coordinates. Orthogonal; a reflection when Y points down.
    pub fn camera_to_structure(&self) -> Matrix3<f64> {
        let (s, c) = self.yaw.sin_cos();
        let v = self.vertical_sign.value();
        Matrix3::new(
            -s, 0.0, c, //
            0.0, v, 0.0, //
            c, 0.0, s,
        )
    }
}

/// Builds the frame from the in-situ right triangle: the perpendicular
/// distance from the reference camera to the bridge and the longitudinal
/// distance from the bridge end to the target at the image center. The
/// camera is assumed to stand at the bridge-end station.
pub fn structure_frame_from_layout(
    perp_distance: f64,
    longitudinal_distance: f64,
    vertical_sign: VerticalSign,
) -> Result<StructureFrame> {
    structure_frame_from_layout_with_station(perp_distance, longitudinal_distance, 0.0, vertical_sign)
}

/// As [`structure_frame_from_layout`], with the camera's longitudinal
/// station measured from the same bridge end.
pub fn structure_frame_from_layout_with_station(
    perp_distance: f64,
    longitudinal_distance: f64,
    camera_station: f64,
    vertical_sign: VerticalSign,
) -> Result<StructureFrame> {
    if !(perp_distance > 0.0) || !perp_distance.is_finite() {
        return Err(Error::Domain(format!(
            "perpendicular distance must be positive, got {perp_distance}"
        )));
    }
    if !(longitudinal_distance >= 0.0) || !longitudinal_distance.is_finite() {
        return Err(Error::Domain(format!(
            "longitudinal distance must be non-negative, got {longitudinal_distance}"
        )));
    }
    if !camera_station.is_finite() {
        return Err(Error::Domain("camera station must be finite".into()));
    }
    StructureFrame::new(
        (longitudinal_distance - camera_station).atan2(perp_distance),
        vertical_sign,
    )
}

pub fn to_structure_frame(frame: &StructureFrame, p: &Point3) -> Result<Point3> {
    ensure_finite_point(p)?;
    Ok(frame.camera_to_structure() * p)
}

/// Inverse of [`to_structure_frame`].
pub fn from_structure_frame(frame: &StructureFrame, p: &Point3) -> Result<Point3> {
    ensure_finite_point(p)?;
    Ok(frame.camera_to_structure().transpose() * p)
}
