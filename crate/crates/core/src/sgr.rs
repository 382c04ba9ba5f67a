//! Structural geometry refinement.
//!
//! The horizontal pixel coordinate of one view is corrected so that the
//! re-triangulated structure-frame motion has little longitudinal (Z)
//! displacement while lateral/vertical motion stays close to the plain
//! triangulation. The objective sums five squared terms:
//!
//! ```text
//! E = w_z_abs  * sum (Z - mean Z0)^2 / nZ^2
//!   + w_z_diff * sum (dZ)^2 / nZ^2
//!   + w_xy_abs * sum [(X - X0)^2 / nX^2 + (Y - Y0)^2 / nY^2]
//!   + w_xy_diff* sum [(dX - dX0)^2 / nX^2 + (dY - dY0)^2 / nY^2]
//!   + w_2d     * sum (du / pixel_scale)^2
//! ```
//!
//! where `d` is the forward temporal difference, `0` marks the baseline
//! triangulation, and `nX, nY, nZ` are per-point characteristic motion
//! scales: the temporal std of the baseline coordinate, floored at
//! `scale_floor_mm`. Weights act on the normalized residuals.
//!
//! Only the refined view's horizontal coordinate moves; the other view,
//! vertical coordinates and all camera parameters stay fixed.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{recover_scale, to_structure_frame, PixelPoint, StereoRig, StructureFrame};
use crate::track::{Track2D, Trajectory3D};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinedView {
    View1,
    #[default]
    View2,
}

impl RefinedView {
    pub fn index(self) -> usize {
        match self {
            RefinedView::View1 => 0,
            RefinedView::View2 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgrWeights {
    pub z_abs: f64,
    pub z_diff: f64,
    pub xy_abs: f64,
    pub xy_diff: f64,
    pub pixel: f64,
}

impl Default for SgrWeights {
    fn default() -> Self {
        Self {
            z_abs: 4.0,
            z_diff: 8.0,
            xy_abs: 6.0,
            xy_diff: 12.0,
            pixel: 0.05,
        }
    }
}

impl SgrWeights {
    fn as_array(&self) -> [f64; 5] {
        [self.z_abs, self.z_diff, self.xy_abs, self.xy_diff, self.pixel]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!("SGR weights must be finite and >= 0: {w:?}")));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain("SGR weights are all zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgrConfig {
    pub refined_view: RefinedView,
    pub max_iterations: usize,
    /// Stop when the relative decrease of the objective falls below this.
    pub convergence_tol: f64,
    pub scale_floor_mm: f64,
    pub pixel_scale_px: f64,
    /// Forward-difference step for the Jacobian.
    pub jacobian_step_px: f64,
}

impl Default for SgrConfig {
    fn default() -> Self {
        Self {
            refined_view: RefinedView::View2,
            max_iterations: 50,
            convergence_tol: 1e-8,
            scale_floor_mm: 0.1,
            pixel_scale_px: 1.0,
            jacobian_step_px: 1e-4,
        }
    }
}

impl SgrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Domain("convergence_tol must be positive".into()));
        }
        if !(self.scale_floor_mm > 0.0) {
            return Err(Error::Domain("scale_floor_mm must be positive".into()));
        }
        if !(self.pixel_scale_px > 0.0) || !(self.jacobian_step_px > 0.0) {
            return Err(Error::Domain("pixel_scale_px and jacobian_step_px must be positive".into()));
        }
        Ok(())
    }
}

/// Horizontal corrections of the refined view, `[point][frame]`, pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelCorrection {
    pub du: Vec<Vec<f64>>,
}

impl PixelCorrection {
    pub fn zeros(n_points: usize, n_frames: usize) -> Self {
        Self {
            du: vec![vec![0.0; n_frames]; n_points],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.du.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Plain triangulation in the structure frame, millimeters, `[point][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTrajectories {
    pub positions: Vec<Vec<Vector3<f64>>>,
    /// `positions[t + 1] - positions[t]`, one shorter than `positions`.
    pub diffs: Vec<Vec<Vector3<f64>>>,
}

impl BaselineTrajectories {
    fn from_positions(positions: Vec<Vec<Vector3<f64>>>) -> Self {
        let diffs = positions
            .iter()
            .map(|row| row.windows(2).map(|w| w[1] - w[0]).collect())
            .collect();
        Self { positions, diffs }
    }
}

/// Scaled rig + structure frame: maps one correspondence to a
/// structure-frame point in millimeters.
struct Reconstructor {
    rig: StereoRig,
    frame: StructureFrame,
}

impl Reconstructor {
    fn new(rig: &StereoRig, frame: &StructureFrame) -> Result<Self> {
        let (_, rig) = recover_scale(rig)?;
        Ok(Self { rig, frame: *frame })
    }

    fn point_mm(&self, u1: PixelPoint, u2: PixelPoint) -> Result<Vector3<f64>> {
        let x = self.rig.triangulate(u1, u2)?;
        Ok(to_structure_frame(&self.frame, &x)? * 1e3)
    }
}

fn check_tracks(tracks1: &Track2D, tracks2: &Track2D) -> Result<()> {
    if tracks1.n_frames() != tracks2.n_frames() {
        return Err(Error::Contract(format!(
            "view 1 has {} frames, view 2 has {}",
            tracks1.n_frames(),
            tracks2.n_frames()
        )));
    }
    if tracks1.point_ids() != tracks2.point_ids() {
        return Err(Error::Contract("views track different point ids".into()));
    }
    if tracks1.n_frames() < 2 {
        return Err(Error::Contract(format!(
            "at least 2 frames are needed, got {}",
            tracks1.n_frames()
        )));
    }
    Ok(())
}

/// Undistort, triangulate with the metrically scaled rig and map every
/// frame to the structure frame (mm).
pub fn baseline_triangulation(
    tracks1: &Track2D,
    tracks2: &Track2D,
    rig: &StereoRig,
    frame: &StructureFrame,
) -> Result<BaselineTrajectories> {
    check_tracks(tracks1, tracks2)?;
    let recon = Reconstructor::new(rig, frame)?;
    let positions = tracks1
        .points()
        .iter()
        .zip(tracks2.points())
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(t, (u1, u2))| recon.point_mm(*u1, *u2).map_err(|e| e.at_frame(t)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaselineTrajectories::from_positions(positions))
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-point residual scaling derived from the baseline.
#[derive(Debug, Clone)]
struct Scaling {
    /// `sqrt(w) / n` for the abs terms of X, Y, Z.
    abs: Vec<[f64; 3]>,
    /// `sqrt(w) / n` for the diff terms of X, Y, Z.
    diff: Vec<[f64; 3]>,
    pixel: f64,
    /// Temporal mean of baseline Z, the longitudinal zero reference.
    z_mean: Vec<f64>,
}

impl Scaling {
    fn new(baseline: &BaselineTrajectories, w: &SgrWeights, cfg: &SgrConfig) -> Self {
        let mut abs = Vec::new();
        let mut diff = Vec::new();
        let mut z_mean = Vec::new();
        for row in &baseline.positions {
            let mut n = [0.0; 3];
            for (axis, slot) in n.iter_mut().enumerate() {
                let (mean, std) = mean_std(row.iter().map(|p| p[axis]));
                *slot = std.max(cfg.scale_floor_mm);
                if axis == 2 {
                    z_mean.push(mean);
                }
            }
            abs.push([w.xy_abs.sqrt() / n[0], w.xy_abs.sqrt() / n[1], w.z_abs.sqrt() / n[2]]);
            diff.push([w.xy_diff.sqrt() / n[0], w.xy_diff.sqrt() / n[1], w.z_diff.sqrt() / n[2]]);
        }
        Self {
            abs,
            diff,
            pixel: w.pixel.sqrt() / cfg.pixel_scale_px,
            z_mean,
        }
    }

    /// Residual of the abs term of `axis` at one frame.
    fn abs_residual(&self, p: usize, axis: usize, pos: &Vector3<f64>, base: &Vector3<f64>) -> f64 {
        let target = if axis == 2 { self.z_mean[p] } else { base[axis] };
        self.abs[p][axis] * (pos[axis] - target)
    }

    fn diff_residual(&self, p: usize, axis: usize, d: f64, d0: f64) -> f64 {
        let target = if axis == 2 { 0.0 } else { d0 };
        self.diff[p][axis] * (d - target)
    }
}

/// Residuals of one point, in the order: Z abs, Z diff, X abs, Y abs,
/// X diff, Y diff, pixel.
fn point_residuals(
    scaling: &Scaling,
    p: usize,
    positions: &[Vector3<f64>],
    du: &[f64],
    baseline: &BaselineTrajectories,
    out: &mut Vec<f64>,
) {
    let base = &baseline.positions[p];
    let base_d = &baseline.diffs[p];
    let t_len = positions.len();
    for t in 0..t_len {
        out.push(scaling.abs_residual(p, 2, &positions[t], &base[t]));
    }
    for t in 0..t_len - 1 {
        out.push(scaling.diff_residual(p, 2, positions[t + 1].z - positions[t].z, base_d[t].z));
    }
    for axis in 0..2 {
        for t in 0..t_len {
            out.push(scaling.abs_residual(p, axis, &positions[t], &base[t]));
        }
    }
    for axis in 0..2 {
        for t in 0..t_len - 1 {
            let d = positions[t + 1][axis] - positions[t][axis];
            out.push(scaling.diff_residual(p, axis, d, base_d[t][axis]));
        }
    }
    out.extend(du.iter().map(|d| scaling.pixel * d));
}

struct Problem<'a> {
    tracks: [&'a Track2D; 2],
    refined: usize,
    recon: Reconstructor,
    baseline: &'a BaselineTrajectories,
    scaling: Scaling,
}

impl<'a> Problem<'a> {
    fn new(
        tracks1: &'a Track2D,
        tracks2: &'a Track2D,
        rig: &StereoRig,
        frame: &StructureFrame,
        baseline: &'a BaselineTrajectories,
        w: &SgrWeights,
        cfg: &SgrConfig,
    ) -> Result<Self> {
        w.validate()?;
        cfg.validate()?;
        check_tracks(tracks1, tracks2)?;
        if baseline.positions.len() != tracks1.n_points()
            || baseline.positions.iter().any(|r| r.len() != tracks1.n_frames())
        {
            return Err(Error::Contract("baseline shape does not match tracks".into()));
        }
        Ok(Self {
            tracks: [tracks1, tracks2],
            refined: cfg.refined_view.index(),
            recon: Reconstructor::new(rig, frame)?,
            baseline,
            scaling: Scaling::new(baseline, w, cfg),
        })
    }

    fn position(&self, p: usize, t: usize, du: f64) -> Result<Vector3<f64>> {
        let mut obs = [self.tracks[0].point(p)[t], self.tracks[1].point(p)[t]];
        obs[self.refined].u += du;
        self.recon.point_mm(obs[0], obs[1]).map_err(|e| e.at_frame(t))
    }

    fn positions(&self, corr: &PixelCorrection) -> Result<Vec<Vec<Vector3<f64>>>> {
        corr.du
            .iter()
            .enumerate()
            .map(|(p, row)| {
                row.iter()
                    .enumerate()
                    .map(|(t, &d)| self.position(p, t, d))
                    .collect()
            })
            .collect()
    }

    fn residuals(&self, positions: &[Vec<Vector3<f64>>], corr: &PixelCorrection) -> Vec<f64> {
        let mut out = Vec::new();
        for (p, pos) in positions.iter().enumerate() {
            point_residuals(&self.scaling, p, pos, &corr.du[p], self.baseline, &mut out);
        }
        out
    }

    fn objective(&self, positions: &[Vec<Vector3<f64>>], corr: &PixelCorrection) -> f64 {
        self.residuals(positions, corr).iter().map(|r| r * r).sum()
    }

    /// Tridiagonal `J^T J` (diag, upper) and `J^T r` of one point, from the
    /// per-frame position derivatives `g[t] = d pos[t] / d du[t]`.
    fn normal_equations(
        &self,
        p: usize,
        pos: &[Vector3<f64>],
        g: &[Vector3<f64>],
        du: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let s = &self.scaling;
        let base = &self.baseline.positions[p];
        let base_d = &self.baseline.diffs[p];
        let n = pos.len();
        let mut diag = vec![s.pixel * s.pixel; n];
        let mut upper = vec![0.0; n.saturating_sub(1)];
        let mut grad: Vec<f64> = du.iter().map(|d| s.pixel * s.pixel * d).collect();
        for axis in 0..3 {
            let a = s.abs[p][axis];
            let b = s.diff[p][axis];
            for t in 0..n {
                let r = s.abs_residual(p, axis, &pos[t], &base[t]);
                diag[t] += a * a * g[t][axis] * g[t][axis];
                grad[t] += a * g[t][axis] * r;
            }
            for t in 0..n - 1 {
                let d = pos[t + 1][axis] - pos[t][axis];
                let r = s.diff_residual(p, axis, d, base_d[t][axis]);
                let (j0, j1) = (-b * g[t][axis], b * g[t + 1][axis]);
                diag[t] += j0 * j0;
                diag[t + 1] += j1 * j1;
                upper[t] += j0 * j1;
                grad[t] += j0 * r;
                grad[t + 1] += j1 * r;
            }
        }
        (diag, upper, grad)
    }
}

/// Solves a symmetric tridiagonal system (Thomas algorithm).
fn solve_tridiagonal(diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - upper[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - upper[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Objective residual vector for a given correction.
///
/// Its squared norm is the refinement objective.
#[allow(clippy::too_many_arguments)]
pub fn sgr_residuals(
    corr: &PixelCorrection,
    tracks1: &Track2D,
    tracks2: &Track2D,
    rig: &StereoRig,
    frame: &StructureFrame,
    baseline: &BaselineTrajectories,
    w: &SgrWeights,
    cfg: &SgrConfig,
) -> Result<Vec<f64>> {
    let problem = Problem::new(tracks1, tracks2, rig, frame, baseline, w, cfg)?;
    tracks1.check_shape(&corr.du)?;
    let positions = problem.positions(corr)?;
    Ok(problem.residuals(&positions, corr))
}

/// Output of [`refine`].
#[derive(Debug, Clone)]
pub struct Refinement {
    /// Tracks of the refined view after correction.
    pub corrected: Track2D,
    pub correction: PixelCorrection,
    /// Refined structure-frame trajectory, meters.
    pub trajectory: Trajectory3D,
    pub baseline: BaselineTrajectories,
    /// Objective at the start and after every accepted step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Diagnostics for a refinement whose damping trials all failed to lower
/// the objective.
#[derive(Debug, Clone)]
pub struct Stagnation {
    pub best: Refinement,
    pub gradient_norm: f64,
    pub damping: f64,
}

impl std::fmt::Display for Stagnation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no damping lowered the objective after {} iterations (objective {:e}, gradient norm {:e}, damping {:e})",
            self.best.iterations,
            self.best.objective_history.last().copied().unwrap_or(f64::NAN),
            self.gradient_norm,
            self.damping
        )
    }
}

const MAX_DAMPING_TRIALS: usize = 12;
const INITIAL_DAMPING: f64 = 1e-3;

/// Damped Gauss-Newton (Levenberg-Marquardt) minimization of the refinement
/// objective over the refined view's horizontal corrections.
pub fn refine(
    tracks1: &Track2D,
    tracks2: &Track2D,
    rig: &StereoRig,
    frame: &StructureFrame,
    w: &SgrWeights,
    cfg: &SgrConfig,
) -> Result<Refinement> {
    let baseline = baseline_triangulation(tracks1, tracks2, rig, frame)?;
    let problem = Problem::new(tracks1, tracks2, rig, frame, &baseline, w, cfg)?;
    let (n_points, n_frames) = (tracks1.n_points(), tracks1.n_frames());

    let mut corr = PixelCorrection::zeros(n_points, n_frames);
    let mut positions = baseline.positions.clone();
    let mut objective = problem.objective(&positions, &corr);
    let mut history = vec![objective];
    let mut damping = INITIAL_DAMPING;
    let mut converged = objective == 0.0;
    let mut iterations = 0;
    let h = cfg.jacobian_step_px;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let mut systems = Vec::with_capacity(n_points);
        let mut grad_sq = 0.0;
        for p in 0..n_points {
            let g = (0..n_frames)
                .map(|t| Ok((problem.position(p, t, corr.du[p][t] + h)? - positions[p][t]) / h))
                .collect::<Result<Vec<_>>>()?;
            let sys = problem.normal_equations(p, &positions[p], &g, &corr.du[p]);
            grad_sq += sys.2.iter().map(|v| v * v).sum::<f64>();
            systems.push(sys);
        }
        let gradient_norm = grad_sq.sqrt();

        let mut accepted = false;
        let mut last_step_norm = 0.0;
        for _ in 0..MAX_DAMPING_TRIALS {
            let mut trial = corr.clone();
            let mut step_sq = 0.0;
            for (p, (diag, upper, grad)) in systems.iter().enumerate() {
                let damped: Vec<f64> = diag.iter().map(|d| d + damping * d.max(1e-12)).collect();
                let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
                let step = solve_tridiagonal(&damped, upper, &rhs);
                for (du, s) in trial.du[p].iter_mut().zip(&step) {
                    *du += s;
                    step_sq += s * s;
                }
            }
            last_step_norm = step_sq.sqrt();
            let candidate = problem.positions(&trial);
            if let Ok(candidate) = candidate {
                let value = problem.objective(&candidate, &trial);
                if value < objective {
                    let rel = (objective - value) / objective;
                    corr = trial;
                    positions = candidate;
                    objective = value;
                    history.push(objective);
                    damping = (damping * 0.1).max(1e-12);
                    accepted = true;
                    converged = rel < cfg.convergence_tol;
                    break;
                }
            }
            damping *= 10.0;
        }

        if !accepted {
            // first-order predicted change below round-off: a numerical minimum
            if gradient_norm * last_step_norm <= 1e-12 * objective.max(f64::MIN_POSITIVE)
                || gradient_norm <= 1e-10 * objective.sqrt().max(1.0)
            {
                converged = true;
                break;
            }
            let best = assemble(tracks1, tracks2, cfg, corr, positions, baseline, history, iterations, false)?;
            return Err(Error::Stagnation(Box::new(Stagnation {
                best,
                gradient_norm,
                damping,
            })));
        }
    }

    assemble(tracks1, tracks2, cfg, corr, positions, baseline, history, iterations, converged)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    tracks1: &Track2D,
    tracks2: &Track2D,
    cfg: &SgrConfig,
    correction: PixelCorrection,
    positions_mm: Vec<Vec<Vector3<f64>>>,
    baseline: BaselineTrajectories,
    objective_history: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> Result<Refinement> {
    let refined = match cfg.refined_view {
        RefinedView::View1 => tracks1,
        RefinedView::View2 => tracks2,
    };
    let corrected = refined.with_horizontal_offsets(&correction.du)?;
    let trajectory = Trajectory3D {
        times: tracks1.times().to_vec(),
        point_ids: tracks1.point_ids().to_vec(),
        positions: positions_mm
            .into_iter()
            .map(|row| row.into_iter().map(|p| p * 1e-3).collect())
            .collect(),
    };
    Ok(Refinement {
        corrected,
        correction,
        trajectory,
        baseline,
        objective_history,
        iterations,
        converged,
    })
}

/// Converts baseline millimeter positions into a meter trajectory.
pub fn baseline_trajectory(tracks: &Track2D, baseline: &BaselineTrajectories) -> Trajectory3D {
    Trajectory3D {
        times: tracks.times().to_vec(),
        point_ids: tracks.point_ids().to_vec(),
        positions: baseline
            .positions
            .iter()
            .map(|row| row.iter().map(|p| p * 1e-3).collect())
            .collect(),
    }
}
