//! The six pipeline stages. Each reads its inputs through the run
//! configuration, writes its outputs atomically and returns a short summary.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use girder_core::geometry::{StereoRig, StructureFrame};
use girder_core::metrics::{peak_to_peak, MetricReport};
use girder_core::sgr::{self, baseline_trajectory, Refinement};
use girder_core::signals::{derive_reference, interpolate, synchronize, ScalarSeries, Unit};
use girder_core::synth::{self, NoiseSpec};
use girder_core::track::{Axis, Track2D};
use serde::{Deserialize, Serialize};

use crate::config::{Loaded, Prediction};
use crate::error::{CliError, CliResult, Context};
use crate::io::{
    read_accel, read_displacements, read_json, read_tracks, trajectory_displacements, write_accel,
    write_displacements, write_json, write_tracks, PointDisplacement,
};
use crate::plot::{self, Series};
use crate::report::{amplitude_checks, Amplitudes, EvaluationReport, ReportEntry};
use crate::rigdoc::RigDocument;

pub const TOOL: &str = "girder-kit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Samples closer than this are treated as the same instant.
const TIME_MATCH_S: f64 = 1e-6;

/// One invocation: configuration plus command-line overrides.
#[derive(Debug, Clone)]
pub struct Run {
    pub loaded: Loaded,
    pub seed_override: Option<u64>,
    pub plots: bool,
}

impl Run {
    pub fn new(loaded: Loaded, seed_override: Option<u64>, plots: bool) -> Self {
        Self {
            loaded,
            seed_override,
            plots,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed_override.or(self.loaded.config.seed).unwrap_or(0)
    }

    fn config_path(&self) -> &std::path::Path {
        &self.loaded.path
    }

    fn load_rig(&self) -> CliResult<(StereoRig, StructureFrame)> {
        let path = self.loaded.rig();
        RigDocument::load(&path)?.to_rig(&path)
    }

    fn load_tracks(&self) -> CliResult<(Track2D, Track2D)> {
        Ok((read_tracks(&self.loaded.tracks(0))?, read_tracks(&self.loaded.tracks(1))?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub tool: String,
    pub version: String,
    pub preset: String,
    pub seed: u64,
    pub sigma_px: [[f64; 2]; 2],
    pub n_frames: usize,
    pub rate_hz: f64,
    pub accel_rate_hz: f64,
    pub accel_lead_in_s: f64,
    pub accel_noise_g: f64,
    pub accel_seed: u64,
}

pub fn simulate(run: &Run) -> CliResult<String> {
    let cfg = &run.loaded.config.simulate;
    let cfg_path = run.config_path();
    let seed = run.seed();
    let scene = synth::scenario(&cfg.preset).context(cfg_path, "simulate.preset")?;
    let noise = NoiseSpec {
        sigma_px: cfg.sigma_px,
        seed,
    };
    let (t1, t2) = scene.render(&noise).context(cfg_path, "simulate")?;
    let truth = scene.ground_truth().context(cfg_path, "simulate")?;
    let accel_seed = seed.wrapping_add(1);
    let accel = synth::render_accel(
        &scene.motion,
        cfg.accel_rate_hz,
        cfg.accel_lead_in_s,
        cfg.accel_noise_g,
        scene.frame.vertical_sign(),
        accel_seed,
    )
    .context(cfg_path, "simulate.accel_rate_hz")?;

    let l = &run.loaded;
    write_tracks(&l.tracks(0), &t1)?;
    write_tracks(&l.tracks(1), &t2)?;
    RigDocument::from_rig(
        &scene.rig,
        scene.layout.perpendicular_distance_m,
        scene.layout.longitudinal_distance_m,
        scene.frame.vertical_sign(),
    )
    .save(&l.rig())?;
    write_accel(&l.accel(), &accel)?;
    let zero = l.config.triangulate.zero_reference;
    write_displacements(&l.out("ground_truth.csv"), &trajectory_displacements(&truth, zero))?;
    write_json(
        &l.out("simulation.json"),
        &SimulationMetadata {
            tool: TOOL.into(),
            version: VERSION.into(),
            preset: cfg.preset.clone(),
            seed,
            sigma_px: cfg.sigma_px,
            n_frames: t1.n_frames(),
            rate_hz: scene.motion.rate_hz,
            accel_rate_hz: cfg.accel_rate_hz,
            accel_lead_in_s: cfg.accel_lead_in_s,
            accel_noise_g: cfg.accel_noise_g,
            accel_seed,
        },
    )?;
    Ok(format!(
        "simulated `{}` (seed {seed}): {} frames x {} point(s) -> {}",
        cfg.preset,
        t1.n_frames(),
        t1.n_points(),
        l.out_dir.display()
    ))
}

pub fn triangulate(run: &Run) -> CliResult<String> {
    let (rig, frame) = run.load_rig()?;
    let (t1, t2) = run.load_tracks()?;
    let tracks_path = run.loaded.tracks(1);
    let base = sgr::baseline_triangulation(&t1, &t2, &rig, &frame).context(&tracks_path, "u_px")?;
    let traj = baseline_trajectory(&t1, &base);
    let zero = run.loaded.config.triangulate.zero_reference;
    let out = run.loaded.baseline();
    write_displacements(&out, &trajectory_displacements(&traj, zero))?;
    Ok(format!(
        "triangulated {} frames x {} point(s) -> {}",
        t1.n_frames(),
        t1.n_points(),
        out.display()
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineSummary {
    pub refined_view: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
    pub max_abs_correction_px: f64,
}

pub fn refine(run: &Run) -> CliResult<String> {
    let (rig, frame) = run.load_rig()?;
    let (t1, t2) = run.load_tracks()?;
    let c = &run.loaded.config;
    let view = c.sgr.solver.refined_view.index();
    let tracks_path = run.loaded.tracks(view);
    let result: Refinement = sgr::refine(&t1, &t2, &rig, &frame, &c.sgr.weights, &c.sgr.solver)
        .context(&tracks_path, "u_px")?;

    let l = &run.loaded;
    let zero = c.triangulate.zero_reference;
    let corrected = l.out(&format!("view{}_tracks_refined.csv", view + 1));
    write_tracks(&corrected, &result.corrected)?;
    let base = baseline_trajectory(&t1, &result.baseline);
    write_displacements(&l.baseline(), &trajectory_displacements(&base, zero))?;
    write_displacements(&l.refined(), &trajectory_displacements(&result.trajectory, zero))?;
    write_json(
        &l.out("refine.json"),
        &RefineSummary {
            refined_view: view + 1,
            iterations: result.iterations,
            converged: result.converged,
            objective_history: result.objective_history.clone(),
            max_abs_correction_px: result.correction.max_abs(),
        },
    )?;
    Ok(format!(
        "refined view {} in {} iteration(s), max |du| = {:.4} px -> {}",
        view + 1,
        result.iterations,
        result.correction.max_abs(),
        l.refined().display()
    ))
}

pub fn reference(run: &Run) -> CliResult<String> {
    let path = run.loaded.accel();
    let raw = read_accel(&path)?;
    let section = &run.loaded.config.reference;
    let mut axes: Vec<Vec<f64>> = Vec::new();
    let mut times: Option<Vec<f64>> = None;
    let mut onset = 0.0;
    for axis in Axis::ALL {
        let map = section.map(axis);
        let field = format!("{:?}", map.channel).to_lowercase() + "_g";
        let d = derive_reference(&raw, map.channel, axis, &section.chain).context(&path, &field)?;
        onset = d.onset;
        match &times {
            None => times = Some(d.t.clone()),
            Some(t) if t.len() != d.t.len() => {
                return Err(CliError::input(&path, field, "axes produced different time grids"))
            }
            _ => {}
        }
        axes.push(d.d.iter().map(|v| v * map.sign).collect());
    }
    let t = times.unwrap_or_default();
    let n = t.len();
    let [x, y, z]: [Vec<f64>; 3] = axes.try_into().expect("three axes");
    let out = run.loaded.reference();
    write_displacements(
        &out,
        &[PointDisplacement {
            point_id: section.point_id,
            t,
            axes: [x, y, z],
        }],
    )?;
    Ok(format!("reference: onset {onset:.3} s, {n} samples -> {}", out.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncSummary {
    /// Lag of the reference behind the prediction, measured from the start
    /// of each series.
    pub lag_s: f64,
    /// Added to reference times to place them on the prediction clock.
    pub offset_s: f64,
    pub n_samples: usize,
}

fn series(path: &std::path::Path, p: &PointDisplacement, axis: Axis) -> CliResult<ScalarSeries> {
    ScalarSeries::new(p.t.clone(), p.axis(axis).to_vec(), Unit::Millimeters).context(path, "time_s")
}

fn find_point<'a>(path: &std::path::Path, points: &'a [PointDisplacement], id: u32) -> CliResult<&'a PointDisplacement> {
    points
        .iter()
        .find(|p| p.point_id == id)
        .ok_or_else(|| CliError::input(path, "point_id", format!("point {id} not present")))
}

pub fn sync(run: &Run) -> CliResult<String> {
    let l = &run.loaded;
    let pred_path = match l.config.sync.prediction {
        Prediction::Baseline => l.baseline(),
        Prediction::Refined => l.refined(),
    };
    let ref_path = l.reference();
    let preds = read_displacements(&pred_path)?;
    let refs = read_displacements(&ref_path)?;
    let r = &refs[0];
    let p = find_point(&pred_path, &preds, r.point_id)?;
    let a = series(&pred_path, p, Axis::Y)?;
    let b = series(&ref_path, r, Axis::Y)?;
    let lag = synchronize(&a, &b, l.config.sync.max_lag_s).context(&ref_path, "y_mm")?;
    let offset = a.t[0] - b.t[0] - lag;

    let (t_lo, t_hi) = (r.t[0], r.t[r.t.len() - 1]);
    let mut shifted = PointDisplacement {
        point_id: r.point_id,
        t: vec![],
        axes: [vec![], vec![], vec![]],
    };
    let ref_series: Vec<ScalarSeries> = Axis::ALL
        .iter()
        .map(|&ax| series(&ref_path, r, ax))
        .collect::<CliResult<_>>()?;
    for &t in &p.t {
        let tau = t - offset;
        if tau < t_lo - TIME_MATCH_S || tau > t_hi + TIME_MATCH_S {
            continue;
        }
        shifted.t.push(t);
        for (k, s) in ref_series.iter().enumerate() {
            shifted.axes[k].push(interpolate(s, tau));
        }
    }
    if shifted.t.len() < 2 {
        return Err(CliError::input(&ref_path, "time_s", "reference and prediction do not overlap after alignment"));
    }
    let n = shifted.t.len();
    write_displacements(&l.reference_synced(), &[shifted])?;
    write_json(
        &l.out("sync.json"),
        &SyncSummary {
            lag_s: lag,
            offset_s: offset,
            n_samples: n,
        },
    )?;
    Ok(format!(
        "sync: lag {lag:.4} s, reference shifted by {offset:.4} s, {n} common samples -> {}",
        l.reference_synced().display()
    ))
}

/// Values of `pred` and `reference` at the prediction times both contain.
fn aligned(pred: &PointDisplacement, reference: &PointDisplacement, axis: Axis) -> (Vec<f64>, Vec<f64>) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut j = 0;
    for (i, &t) in pred.t.iter().enumerate() {
        while j < reference.t.len() && reference.t[j] < t - TIME_MATCH_S {
            j += 1;
        }
        if j < reference.t.len() && (reference.t[j] - t).abs() <= TIME_MATCH_S {
            a.push(pred.axis(axis)[i]);
            b.push(reference.axis(axis)[j]);
        }
    }
    (a, b)
}

fn axis_field(axis: Axis) -> String {
    format!("{}_mm", axis.label().to_lowercase())
}

pub fn evaluate(run: &Run) -> CliResult<EvaluationReport> {
    let l = &run.loaded;
    let c = &l.config;
    let config_echo = serde_json::to_value(c)
        .map_err(|e| CliError::input(&l.path, "document", e.to_string()))?;
    let mut report = EvaluationReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        reproducible: c.evaluate.reproducible,
        generated_unix_s: (!c.evaluate.reproducible)
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)),
        seed: run.seed_override.or(c.seed),
        sync_lag_s: None,
        entries: vec![],
        amplitude_checks: vec![],
        config: config_echo,
    };

    if let Some(table) = l.amplitude_table() {
        report.amplitude_checks = amplitude_checks(&table, c.evaluate.rppae_tolerance)?;
    } else {
        let ref_path = l.reference_synced();
        let refined_path = l.refined();
        let baseline_path = l.baseline();
        let refs = read_displacements(&ref_path)?;
        let refined = read_displacements(&refined_path)?;
        let baseline = if baseline_path.exists() {
            Some(read_displacements(&baseline_path)?)
        } else {
            None
        };
        let sync_path = l.out("sync.json");
        if sync_path.exists() {
            report.sync_lag_s = Some(read_json::<SyncSummary>(&sync_path)?.lag_s);
        }
        for r in &refs {
            let p = find_point(&refined_path, &refined, r.point_id)?;
            let b = match &baseline {
                Some(points) => Some(find_point(&baseline_path, points, r.point_id)?),
                None => None,
            };
            for &axis in &c.evaluate.axes {
                let field = axis_field(axis);
                let (pred, reference) = aligned(p, r, axis);
                if pred.len() < 2 {
                    return Err(CliError::input(
                        &ref_path,
                        "time_s",
                        format!("point {}: fewer than 2 samples share a time with the prediction; run sync first", r.point_id),
                    ));
                }
                let with_sgr = MetricReport::compute(axis, &pred, &reference).context(&refined_path, &field)?;
                let without = match b {
                    Some(b) => {
                        let (pb, rb) = aligned(b, r, axis);
                        Some((MetricReport::compute(axis, &pb, &rb).context(&baseline_path, &field)?, pb))
                    }
                    None => None,
                };
                let amplitudes = Amplitudes {
                    pred_without_sgr_mm: match &without {
                        Some((_, pb)) => Some(peak_to_peak(pb).context(&baseline_path, &field)?),
                        None => None,
                    },
                    pred_with_sgr_mm: peak_to_peak(&pred).context(&refined_path, &field)?,
                    reference_mm: peak_to_peak(&reference).context(&ref_path, &field)?,
                };
                if run.plots {
                    write_plots(run, r.point_id, axis, p, b, r)?;
                }
                report.entries.push(ReportEntry {
                    point_id: r.point_id,
                    axis,
                    with_sgr,
                    without_sgr: without.map(|(m, _)| m),
                    peak_to_peak: amplitudes,
                });
            }
        }
    }
    let out = l.out("report.json");
    crate::io::atomic_write(&out, report.to_json().as_bytes())?;
    Ok(report)
}

fn write_plots(
    run: &Run,
    id: u32,
    axis: Axis,
    refined: &PointDisplacement,
    baseline: Option<&PointDisplacement>,
    reference: &PointDisplacement,
) -> CliResult<()> {
    let (pred, refv) = aligned(refined, reference, axis);
    let t: Vec<f64> = refined
        .t
        .iter()
        .copied()
        .filter(|t| reference.t.iter().any(|r| (r - t).abs() <= TIME_MATCH_S))
        .collect();
    let base = baseline.map(|b| aligned(b, reference, axis).0);
    let mut lines = vec![Series { label: "reference", color: "black", values: &refv }];
    if let Some(b) = &base {
        lines.push(Series { label: "without SGR", color: "darkorange", values: b });
    }
    lines.push(Series { label: "with SGR", color: "steelblue", values: &pred });
    let dir = run.loaded.out("plots");
    let name = |kind: &str| -> PathBuf { dir.join(format!("point{id}_{}_{kind}.svg", axis.label())) };
    let title = format!("point {id}, axis {axis}");
    crate::io::atomic_write(&name("overlay"), plot::overlay(&title, &t, &lines).as_bytes())?;
    crate::io::atomic_write(&name("parity"), plot::parity(&title, &pred, &refv).as_bytes())?;
    Ok(())
}
