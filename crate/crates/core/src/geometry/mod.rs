//! Two-view camera geometry.
//!
//! Camera 1 is the reference view: its pose is the identity and its frame is
//! the camera frame in which points are triangulated before being mapped to
//! the structure frame.

mod camera;
mod epipolar;
mod frame;
mod rig;
mod triangulation;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use camera::{
    back_project, project, Camera, CameraIntrinsics, CameraPose, UNDISTORT_MAX_ITERATIONS,
    UNDISTORT_TOLERANCE,
};
pub use epipolar::{epipolar_residual, essential_matrix};
pub use frame::{
    from_structure_frame, structure_frame_from_layout, structure_frame_from_layout_with_station,
    to_structure_frame, StructureFrame, VerticalSign,
};
pub use rig::{recover_scale, StereoRig};
pub use triangulation::{triangulate_linear, triangulate_midpoint, W_EPSILON};

/// 3D point in meters; the frame is given by context.
pub type Point3 = Vector3<f64>;

/// Image point in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Half-line `origin + lambda * direction`, with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub direction: Vector3<f64>,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Point3, direction: Vector3<f64>) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn at(&self, lambda: f64) -> Point3 {
        self.origin + self.direction * lambda
    }

    /// Euclidean distance from `x` to the infinite line through the ray.
    pub fn distance_to(&self, x: &Point3) -> f64 {
        let w = x - self.origin;
        (w - self.direction * w.dot(&self.direction)).norm()
    }
}

pub(crate) fn ensure_finite_point(x: &Point3) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("point must be finite".into()))
    }
}
