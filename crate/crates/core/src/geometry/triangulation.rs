use nalgebra::{Matrix3, Matrix3x4, Matrix4, RowVector4, Vector3};

use crate::{Error, Result};

use super::{PixelPoint, Point3, Ray};

/// Dehomogenization guard on the unit-norm homogeneous solution.
pub const W_EPSILON: f64 = 1e-12;

const PARALLEL_EPSILON: f64 = 1e-12;

/// Optical center of a finite projective camera, `-M^-1 p4` for `P = [M | p4]`.
fn projection_center(p: &Matrix3x4<f64>) -> Option<Vector3<f64>> {
    let m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
    let p4: Vector3<f64> = p.column(3).into_owned();
    m.try_inverse().map(|inv| -(inv * p4))
}

/// Linear (DLT) two-view triangulation.
///
/// Each view contributes the rows `u P3 - P1` and `v P3 - P2`. The rows are
/// scaled to unit norm, which leaves the null vector unchanged, and the
/// right singular vector of the smallest singular value is dehomogenized.
///
/// `u1`/`u2` must be distortion-free image points consistent with `p1`/`p2`
/// (pixels with `P = K[R|t]`, or normalized coordinates with `P = [R|t]`).
pub fn triangulate_linear(
    p1: &Matrix3x4<f64>,
    p2: &Matrix3x4<f64>,
    u1: PixelPoint,
    u2: PixelPoint,
) -> Result<Point3> {
    if !u1.is_finite() || !u2.is_finite() {
        return Err(Error::Domain("observations must be finite".into()));
    }
    match (projection_center(p1), projection_center(p2)) {
        (Some(c1), Some(c2)) => {
            let scale = c1.norm().max(c2.norm()).max(1.0);
            if (c1 - c2).norm() <= 1e-12 * scale {
                return Err(Error::Degenerate("identical camera centers".into()));
            }
        }
        _ => return Err(Error::Degenerate("projection matrix is singular".into())),
    }

    let row = |p: &Matrix3x4<f64>, coord: f64, axis: usize| -> RowVector4<f64> {
        let r = p.row(2) * coord - p.row(axis);
        let n = r.norm();
        if n > 0.0 {
            r / n
        } else {
            r
        }
    };
    let a = Matrix4::from_rows(&[
        row(p1, u1.u, 0),
        row(p1, u1.v, 1),
        row(p2, u2.u, 0),
        row(p2, u2.v, 1),
    ]);

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD did not converge".into()))?;
    let (min_idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    let h = v_t.row(min_idx);
    let w = h[3];
    if w.abs() < W_EPSILON {
        return Err(Error::PointAtInfinity { w });
    }
    Ok(Point3::new(h[0] / w, h[1] / w, h[2] / w))
}

/// Midpoint of the shortest segment joining two viewing rays.
pub fn triangulate_midpoint(r1: &Ray, r2: &Ray) -> Result<Point3> {
    let (d1, d2) = (r1.direction, r2.direction);
    let w0 = r1.origin - r2.origin;
    let b = d1.dot(&d2);
    let d = d1.dot(&w0);
    let e = d2.dot(&w0);
    let denom = 1.0 - b * b;
    if b.abs() >= 1.0 - PARALLEL_EPSILON {
        // closest approach parameters for parallel lines: pin s = 0
        return Err(Error::ParallelRays {
            cos_angle: b.abs(),
            s: 0.0,
            t: e,
        });
    }
    let s = (b * e - d) / denom;
    let t = (e - b * d) / denom;
    let p1 = r1.at(s);
    let p2 = r2.at(t);
    Ok((p1 + p2) * 0.5)
}
