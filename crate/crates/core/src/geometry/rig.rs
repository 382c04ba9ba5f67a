use nalgebra::Matrix3x4;

use crate::{Error, Result};

use super::{triangulate_linear, Camera, PixelPoint, Point3};

/// Smallest relative-translation norm accepted as a baseline estimate.
const MIN_BASELINE: f64 = 1e-9;

/// Calibrated two-camera rig. Camera 1 defines the reference frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    cam1: Camera,
    cam2: Camera,
    measured_baseline: f64,
}

impl StereoRig {
    pub fn new(cam1: Camera, cam2: Camera, measured_baseline: f64) -> Result<Self> {
        if !cam1.pose.is_identity() {
            return Err(Error::Contract(
                "reference camera pose must be the identity".into(),
            ));
        }
        if !(measured_baseline > 0.0) || !measured_baseline.is_finite() {
            return Err(Error::Domain(format!(
                "measured baseline must be positive, got {measured_baseline}"
            )));
        }
        cam1.intrinsics.validate()?;
        cam2.intrinsics.validate()?;
        if cam2.pose.translation().norm() < MIN_BASELINE {
            return Err(Error::Degenerate(format!(
                "camera 2 translation norm {:e} is below {MIN_BASELINE:e}",
                cam2.pose.translation().norm()
            )));
        }
        Ok(Self {
            cam1,
            cam2,
            measured_baseline,
        })
    }

    pub fn cam1(&self) -> &Camera {
        &self.cam1
    }

    pub fn cam2(&self) -> &Camera {
        &self.cam2
    }

    pub fn camera(&self, view: usize) -> &Camera {
        if view == 0 {
            &self.cam1
        } else {
            &self.cam2
        }
    }

    /// Known physical baseline, meters.
    pub fn measured_baseline(&self) -> f64 {
        self.measured_baseline
    }

    /// Baseline implied by the camera-2 translation.
    pub fn estimated_baseline(&self) -> f64 {
        self.cam2.pose.translation().norm()
    }

    /// Triangulates one correspondence of raw (distorted) pixels in the
    /// camera-1 frame, in the units of the rig translation.
    pub fn triangulate(&self, u1: PixelPoint, u2: PixelPoint) -> Result<Point3> {
        let x1 = self.cam1.intrinsics.undistort(u1)?;
        let x2 = self.cam2.intrinsics.undistort(u2)?;
        triangulate_linear(
            &self.normalized_projection(0),
            &self.normalized_projection(1),
            PixelPoint::new(x1.x, x1.y),
            PixelPoint::new(x2.x, x2.y),
        )
    }

    /// `[R | t]` of a view, the projection acting on normalized coordinates.
    pub fn normalized_projection(&self, view: usize) -> Matrix3x4<f64> {
        self.camera(view).pose.extrinsic_matrix()
    }
}

/// Rescales the rig so that the camera-2 translation matches the measured
/// baseline. Returns `(s, scaled_rig)` with `s = B_true / B_est`; the same `s`
/// applies to every point triangulated with the unscaled rig.
pub fn recover_scale(rig: &StereoRig) -> Result<(f64, StereoRig)> {
    let est = rig.estimated_baseline();
    if est < MIN_BASELINE {
        return Err(Error::Degenerate(format!(
            "estimated baseline {est:e} is below {MIN_BASELINE:e}"
        )));
    }
    let s = rig.measured_baseline / est;
    let mut scaled = *rig;
    if s != 1.0 {
        scaled.cam2.pose = rig
            .cam2
            .pose
            .with_translation(rig.cam2.pose.translation() * s);
    }
    Ok((s, scaled))
}
