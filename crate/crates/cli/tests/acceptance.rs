//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use girder_core::geometry::{recover_scale, Camera, StereoRig};
use girder_core::metrics::{nrmse_range, pearson_correlation, rppae};
use girder_core::sgr::{refine, SgrConfig, SgrWeights};
use girder_core::signals::{displacement_chain, synchronize, ReferenceConfig, ScalarSeries, Unit};
use girder_core::synth::{random_scene, scenario, NoiseSpec};
use girder_core::track::Axis;
use girder_kit::report::EvaluationReport;
use girder_kit::{run, Cli, Stage};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Runs one criterion and adds a runtime check against `budget`.
fn criterion(n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "criterion {n} ({name}): {} | {} | {:.3} s (budget {:.0} s){}",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs_f64(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn temp_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn cli(stage: Stage, config: &Path) -> Cli {
    Cli {
        stage,
        config: config.to_path_buf(),
        seed: None,
        out: None,
        plots: false,
    }
}

/// Published amplitude pairs reproduce the published RPPAE columns.
fn amplitude_table() -> Outcome {
    const TOL: f64 = 0.005;
    let dir = tempfile::tempdir().unwrap();
    let table = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/field_amplitudes.csv");
    let cfg = temp_config(
        dir.path(),
        &format!("[evaluate]\namplitude_table = {:?}\nrppae_tolerance = {TOL}\nreproducible = true\n", table),
    );
    if let Err(e) = run(&cli(Stage::Evaluate, &cfg)) {
        return outcome(false, format!("evaluate failed: {e}"));
    }
    let path = dir.path().join("out/report.json");
    let report = EvaluationReport::from_json(&path, &std::fs::read_to_string(&path).unwrap()).unwrap();
    let checks = &report.amplitude_checks;
    let bad: Vec<String> = checks
        .iter()
        .filter(|c| c.within_tolerance != Some(true))
        .map(|c| {
            format!(
                "{} {} {}: |{:.2}-{:.2}|/{:.2} = {:.4} vs {:.2}",
                c.label,
                c.axis,
                c.variant,
                c.pred_mm,
                c.reference_mm,
                c.reference_mm,
                c.rppae,
                c.expected_rppae.unwrap_or(f64::NAN)
            )
        })
        .collect();
    let detail = format!(
        "{}/{} pairs within +-{TOL}{}",
        checks.len() - bad.len(),
        checks.len(),
        if bad.is_empty() { String::new() } else { format!("; outside: {}", bad.join("; ")) }
    );
    outcome(checks.len() == 24 && bad.is_empty(), detail)
}

/// Noiseless random scenes triangulate exactly.
fn triangulation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let (mut rel, mut px): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let scene = random_scene(&mut rng).unwrap();
        let (c1, c2) = (scene.rig.cam1(), scene.rig.cam2());
        let u1 = c1.project(&scene.point).unwrap();
        let u2 = c2.project(&scene.point).unwrap();
        let x = scene.rig.triangulate(u1, u2).unwrap();
        rel = rel.max((x - scene.point).norm() / scene.point.norm());
        for (cam, u) in [(c1, u1), (c2, u2)] {
            let r = cam.project(&x).unwrap();
            px = px.max((r.u - u.u).hypot(r.v - u.v));
        }
    }
    outcome(
        rel < 1e-8 && px < 1e-8,
        format!("1000 scenes: max relative 3D error {rel:.2e} (< 1e-8), max reprojection {px:.2e} px (< 1e-8)"),
    )
}

/// Arbitrarily scaled translations recover the metric scene.
fn scale_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let scene = random_scene(&mut rng).unwrap();
        let factor = 10f64.powf(rng.random_range(-2.0..=2.0));
        let pose = scene.rig.cam2().pose;
        let cam2 = Camera::new(scene.rig.cam2().intrinsics, pose.with_translation(pose.translation() * factor));
        let ambiguous = StereoRig::new(*scene.rig.cam1(), cam2, scene.rig.measured_baseline()).unwrap();
        let u1 = scene.rig.cam1().project(&scene.point).unwrap();
        let u2 = scene.rig.cam2().project(&scene.point).unwrap();
        let (_, metric) = recover_scale(&ambiguous).unwrap();
        worst = worst.max((metric.triangulate(u1, u2).unwrap() - scene.point).norm());
    }
    outcome(worst < 1e-8, format!("500 scenes, factors 1e-2..1e2: max error {worst:.2e} m (< 1e-8)"))
}

fn rms(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Refinement suppresses longitudinal noise and leaves vertical motion alone.
fn sgr_noise_suppression() -> Outcome {
    let s = scenario("data2-mid").unwrap();
    let mut reductions = Vec::new();
    let mut worst_y: f64 = 0.0;
    let mut v_identical = true;
    for seed in 0..20 {
        let (t1, t2) = s.render(&NoiseSpec::view2_horizontal(0.5, seed)).unwrap();
        let out = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
        let n = t1.n_frames();
        let z0 = rms((0..n).map(|t| out.baseline.positions[0][t].z));
        let z1 = rms((0..n).map(|t| out.trajectory.positions[0][t].z * 1e3));
        let y0 = rms((0..n).map(|t| out.baseline.positions[0][t].y));
        let y1 = rms((0..n).map(|t| out.trajectory.positions[0][t].y * 1e3));
        reductions.push(1.0 - z1 / z0);
        worst_y = worst_y.max((y1 - y0).abs() / y0);
        v_identical &= out
            .corrected
            .point(0)
            .iter()
            .zip(t2.point(0))
            .all(|(a, b)| a.v.to_bits() == b.v.to_bits());
    }
    reductions.sort_by(f64::total_cmp);
    let median = 0.5 * (reductions[9] + reductions[10]);
    outcome(
        median >= 0.5 && worst_y < 0.01 && v_identical,
        format!(
            "20 seeds: median Z RMS reduction {:.1}% (>= 50%), worst Y RMS change {:.2}% (< 1%), vertical pixels bit-identical: {v_identical}",
            100.0 * median,
            100.0 * worst_y
        ),
    )
}

/// Noiseless tracks are a fixed point of the refinement.
fn sgr_fixed_point() -> Outcome {
    let s = scenario("data2-mid").unwrap();
    let (t1, t2) = s.render(&NoiseSpec::none()).unwrap();
    let out = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
    let du = out.correction.max_abs();
    let mut diff: f64 = 0.0;
    for (t, b) in out.baseline.positions[0].iter().enumerate() {
        diff = diff.max((out.trajectory.positions[0][t] * 1e3 - b).norm());
    }
    outcome(
        du < 1e-3 && diff < 1e-4,
        format!("max |du| {du:.2e} px (< 1e-3), refined vs baseline {diff:.2e} mm (< 1e-4)"),
    )
}

/// Least-squares amplitude of a `freq` tone over `[from, to]`, with an
/// offset and slope absorbing slow drift.
fn tone_amplitude(t: &[f64], d: &[f64], freq: f64, from: f64, to: f64) -> f64 {
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= from && t[i] <= to).collect();
    let w = 2.0 * std::f64::consts::PI * freq;
    let a = DMatrix::from_fn(idx.len(), 4, |r, c| {
        let ti = t[idx[r]];
        match c {
            0 => (w * ti).sin(),
            1 => (w * ti).cos(),
            2 => 1.0,
            _ => ti,
        }
    });
    let b = DVector::from_iterator(idx.len(), idx.iter().map(|&i| d[i]));
    let x = a.svd(true, true).solve(&b, 1e-12).unwrap();
    x[0].hypot(x[1])
}

/// Sine acceleration integrates to the analytic displacement amplitude; a
/// constant bias does not drift.
fn accelerometer_chain() -> Outcome {
    let rate = 64.0;
    let n = (16.0 * rate) as usize;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let cfg = ReferenceConfig::default();
    let chain = |values: Vec<f64>| {
        let s = ScalarSeries::new(t.clone(), values, Unit::MetersPerSecond2).unwrap();
        displacement_chain(&s, 0.0, Axis::Y, &cfg).unwrap()
    };
    let f = 3.0;
    let sine = chain(t.iter().map(|&x| (2.0 * std::f64::consts::PI * f * x).sin()).collect());
    let expected = 1e3 / (2.0 * std::f64::consts::PI * f).powi(2);
    let amp = tone_amplitude(&sine.t, &sine.d, f, 2.0, 14.0);
    let rel = (amp - expected).abs() / expected;
    let bias = chain(vec![0.05; n]);
    let drift = bias.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        rel < 0.05 && drift < 0.1,
        format!("amplitude {amp:.4} mm vs {expected:.4} mm ({:.2}%, < 5%), bias drift {drift:.2e} mm (< 0.1)", 100.0 * rel),
    )
}

/// A constructed 7-sample shift is recovered.
fn synchronization() -> Outcome {
    let rate = 30.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 600;
    // Smoothed random walk: broadband, no periodic ambiguity.
    let mut raw = vec![0.0f64; n + 7];
    for i in 1..raw.len() {
        raw[i] = 0.9 * raw[i - 1] + rng.random_range(-1.0..1.0);
    }
    let a = ScalarSeries::uniform(0.0, rate, raw[7..].to_vec(), Unit::Millimeters);
    let b = ScalarSeries::uniform(0.0, rate, raw[..n].to_vec(), Unit::Millimeters);
    let lag = synchronize(&a, &b, 2.0).unwrap();
    let err = (lag * rate - 7.0).abs();
    outcome(err < 0.1, format!("recovered {:.4} samples vs 7 (error {err:.2e} < 0.1)", lag * rate))
}

/// Metric identities hold to rounding.
fn metric_identities() -> Outcome {
    let r: Vec<f64> = (0..480).map(|i| (i as f64 * 0.1).sin() * 5.0 + (i as f64 * 0.037).cos()).collect();
    let affine: Vec<f64> = r.iter().map(|v| 2.5 * v - 1.0).collect();
    let doubled: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
    let e = [
        nrmse_range(&r, &r).unwrap().abs(),
        (pearson_correlation(&r, &r).unwrap() - 1.0).abs(),
        rppae(&r, &r).unwrap().abs(),
        (pearson_correlation(&affine, &r).unwrap() - 1.0).abs(),
        (rppae(&doubled, &r).unwrap() - 1.0).abs(),
    ];
    let worst = e.iter().cloned().fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("identity, affine and doubled cases: worst deviation {worst:.2e} (<= 1e-12)"))
}

/// Command runtimes on a 480-frame, one-point sequence.
fn performance() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = temp_config(dir.path(), "seed = 1\n");
    run(&cli(Stage::Simulate, &cfg)).unwrap();
    let time = |stage| {
        let start = Instant::now();
        run(&cli(stage, &cfg)).unwrap();
        start.elapsed()
    };
    // Warm the file cache before timing.
    time(Stage::Triangulate);
    let tri = (0..5).map(|_| time(Stage::Triangulate)).min().unwrap();
    let refine = time(Stage::Refine);
    outcome(
        refine <= Duration::from_secs(30) && tri <= Duration::from_millis(100),
        format!(
            "refine {:.3} s (<= 30 s), triangulate {:.1} ms (<= 100 ms)",
            refine.as_secs_f64(),
            tri.as_secs_f64() * 1e3
        ),
    )
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "amplitude table cross-check", s(1), amplitude_table),
        criterion(2, "triangulation oracle", s(10), triangulation_oracle),
        criterion(3, "scale recovery", s(5), scale_recovery),
        criterion(4, "SGR noise suppression", s(300), sgr_noise_suppression),
        criterion(5, "SGR zero-noise fixed point", s(30), sgr_fixed_point),
        criterion(6, "accelerometer chain", s(2), accelerometer_chain),
        criterion(7, "synchronization", s(1), synchronization),
        criterion(8, "metric identities", s(1), metric_identities),
        criterion(9, "performance envelope", s(60), performance),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
