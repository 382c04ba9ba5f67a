use nalgebra::{Matrix3, Vector2, Vector3};

use crate::{Error, Result};

use super::CameraPose;

/// Essential matrix `E = [t]x R` of the relative pose mapping view-1 camera
/// coordinates into view 2.
pub fn essential_matrix(rel_pose: &CameraPose) -> Result<Matrix3<f64>> {
    let t = rel_pose.translation();
    if t.norm() == 0.0 {
        return Err(Error::Degenerate(
            "zero relative translation has no essential matrix".into(),
        ));
    }
    Ok(t.cross_matrix() * rel_pose.rotation())
}

/// Signed algebraic epipolar error `x2^T E x1` for normalized image points.
pub fn epipolar_residual(e: &Matrix3<f64>, x1: Vector2<f64>, x2: Vector2<f64>) -> f64 {
    let h1 = Vector3::new(x1.x, x1.y, 1.0);
    let h2 = Vector3::new(x2.x, x2.y, 1.0);
    h2.dot(&(e * h1))
}
