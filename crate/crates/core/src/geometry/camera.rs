use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{PixelPoint, Point3, Ray};

/// Undistortion stops after this many fixed-point iterations.
pub const UNDISTORT_MAX_ITERATIONS: usize = 20;
/// Convergence threshold of the undistortion iteration, normalized units.
pub const UNDISTORT_TOLERANCE: f64 = 1e-10;

/// Pinhole intrinsics with a 5-coefficient radial-tangential distortion
/// `(k1, k2, p1, p2, k3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// `K[0][1]`, in pixels.
    #[serde(default)]
    pub skew: f64,
    #[serde(default)]
    pub dist: [f64; 5],
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64, dist: [f64; 5]) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            skew,
            dist,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Square pixels, no skew, no distortion.
    pub fn simple(f: f64, cx: f64, cy: f64) -> Self {
        Self {
            fx: f,
            fy: f,
            cx,
            cy,
            skew: 0.0,
            dist: [0.0; 5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.fx, self.fy, self.cx, self.cy, self.skew];
        if all.iter().chain(self.dist.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("camera intrinsics must be finite".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::Domain(format!(
                "focal lengths must be positive (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        Ok(())
    }

    pub fn k_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, self.skew, self.cx, //
            0.0, self.fy, self.cy, //
            0.0, 0.0, 1.0,
        )
    }

    pub fn has_distortion(&self) -> bool {
        self.dist.iter().any(|&c| c != 0.0)
    }

    /// Applies the distortion polynomial to normalized image coordinates.
    pub fn distort(&self, xn: Vector2<f64>) -> Vector2<f64> {
        let [k1, k2, p1, p2, k3] = self.dist;
        let (x, y) = (xn.x, xn.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
        let xy = x * y;
        Vector2::new(
            x * radial + 2.0 * p1 * xy + p2 * (r2 + 2.0 * x * x),
            y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * xy,
        )
    }

    /// Maps (distorted) normalized coordinates to pixels through `K`.
    pub fn normalized_to_pixel(&self, xd: Vector2<f64>) -> PixelPoint {
        PixelPoint::new(
            self.fx * xd.x + self.skew * xd.y + self.cx,
            self.fy * xd.y + self.cy,
        )
    }

    /// Inverse of `K`, without removing distortion.
    pub fn pixel_to_normalized(&self, p: PixelPoint) -> Vector2<f64> {
        let y = (p.v - self.cy) / self.fy;
        let x = (p.u - self.cx - self.skew * y) / self.fx;
        Vector2::new(x, y)
    }

    /// Removes lens distortion from a pixel and returns distortion-free
    /// normalized coordinates.
    ///
    /// Inverts the distortion polynomial by fixed-point iteration.
    pub fn undistort(&self, p: PixelPoint) -> Result<Vector2<f64>> {
        if !p.is_finite() {
            return Err(Error::Domain(format!("non-finite pixel ({}, {})", p.u, p.v)));
        }
        let xd = self.pixel_to_normalized(p);
        if !self.has_distortion() {
            return Ok(xd);
        }
        let [k1, k2, p1, p2, k3] = self.dist;
        let mut x = xd;
        let mut step = f64::INFINITY;
        for _ in 0..UNDISTORT_MAX_ITERATIONS {
            let r2 = x.x * x.x + x.y * x.y;
            let radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
            let dx = 2.0 * p1 * x.x * x.y + p2 * (r2 + 2.0 * x.x * x.x);
            let dy = p1 * (r2 + 2.0 * x.y * x.y) + 2.0 * p2 * x.x * x.y;
            let next = Vector2::new((xd.x - dx) / radial, (xd.y - dy) / radial);
            step = (next - x).norm();
            x = next;
            if step < UNDISTORT_TOLERANCE {
                return Ok(x);
            }
        }
        let residual = (self.distort(x) - xd).norm();
        if residual < UNDISTORT_TOLERANCE {
            return Ok(x);
        }
        Err(Error::NotConverged {
            iterations: UNDISTORT_MAX_ITERATIONS,
            residual: residual.max(step),
        })
    }

    /// Undistorted pixel: `K * undistort(p)`.
    pub fn undistort_pixel(&self, p: PixelPoint) -> Result<PixelPoint> {
        let x = self.undistort(p)?;
        Ok(self.normalized_to_pixel(x))
    }
}

/// Rigid world-to-camera transform `x_cam = R * X + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

const ROTATION_TOLERANCE: f64 = 1e-9;

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("pose must be finite".into()));
        }
        let orth = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = rotation.determinant();
        if orth > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::Domain(format!(
                "rotation is not proper orthonormal (max |R^T R - I| = {orth:e}, det = {det})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    /// Optical center in world coordinates, `-R^T t`.
    pub fn center(&self) -> Point3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn transform(&self, x: &Point3) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Self {
        Self {
            rotation: self.rotation,
            translation,
        }
    }

    /// `[R | t]`.
    pub fn extrinsic_matrix(&self) -> Matrix3x4<f64> {
        let mut m = Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// Intrinsics and pose of one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: CameraPose) -> Self {
        Self { intrinsics, pose }
    }

    /// `K [R | t]`.
    pub fn projection_matrix(&self) -> Matrix3x4<f64> {
        self.intrinsics.k_matrix() * self.pose.extrinsic_matrix()
    }

    pub fn project(&self, x: &Point3) -> Result<PixelPoint> {
        project(&self.intrinsics, &self.pose, x)
    }

    pub fn back_project(&self, p: PixelPoint) -> Result<Ray> {
        back_project(&self.intrinsics, &self.pose, p)
    }
}

/// Projects a world point to a (distorted) pixel.
pub fn project(intr: &CameraIntrinsics, pose: &CameraPose, x: &Point3) -> Result<PixelPoint> {
    let xc = pose.transform(x);
    if !(xc.z > 0.0) {
        return Err(Error::BehindCamera { depth: xc.z });
    }
    let xn = Vector2::new(xc.x / xc.z, xc.y / xc.z);
    Ok(intr.normalized_to_pixel(intr.distort(xn)))
}

/// Back-projects a pixel to a viewing ray in world coordinates.
pub fn back_project(intr: &CameraIntrinsics, pose: &CameraPose, p: PixelPoint) -> Result<Ray> {
    let xn = intr.undistort(p)?;
    let dir = pose.rotation().transpose() * Vector3::new(xn.x, xn.y, 1.0);
    Ok(Ray::new(pose.center(), dir))
}
