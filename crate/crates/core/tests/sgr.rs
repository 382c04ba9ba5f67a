use girder_core::geometry::{recover_scale, to_structure_frame};
use girder_core::sgr::{
    baseline_triangulation, refine, sgr_residuals, PixelCorrection, SgrConfig, SgrWeights,
};
use girder_core::synth::{scenario, NoiseSpec, Scenario};
use girder_core::track::Track2D;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn short_scene() -> Scenario {
    let mut s = scenario("data2-mid").unwrap();
    s.motion.duration_s = 4.0;
    s
}

fn noisy(s: &Scenario, seed: u64) -> (Track2D, Track2D) {
    s.render(&NoiseSpec::view2_horizontal(0.5, seed)).unwrap()
}

/// Objective written out term by term from the structure-frame positions.
fn direct_objective(
    corr: &PixelCorrection,
    t1: &Track2D,
    t2: &Track2D,
    s: &Scenario,
    w: &SgrWeights,
    floor: f64,
) -> f64 {
    let (_, rig) = recover_scale(&s.rig).unwrap();
    let tri = |du: f64, p: usize, t: usize| -> Vector3<f64> {
        let mut u2 = t2.point(p)[t];
        u2.u += du;
        to_structure_frame(&s.frame, &rig.triangulate(t1.point(p)[t], u2).unwrap()).unwrap() * 1e3
    };
    let mut total = 0.0;
    for p in 0..t1.n_points() {
        let n = t1.n_frames();
        let base: Vec<Vector3<f64>> = (0..n).map(|t| tri(0.0, p, t)).collect();
        let pos: Vec<Vector3<f64>> = (0..n).map(|t| tri(corr.du[p][t], p, t)).collect();
        let mut scale = [0.0; 3];
        let mut mean = [0.0; 3];
        for a in 0..3 {
            mean[a] = base.iter().map(|v| v[a]).sum::<f64>() / n as f64;
            let var = base.iter().map(|v| (v[a] - mean[a]).powi(2)).sum::<f64>() / n as f64;
            scale[a] = var.sqrt().max(floor);
        }
        for t in 0..n {
            total += w.z_abs * ((pos[t].z - mean[2]) / scale[2]).powi(2);
            for a in 0..2 {
                total += w.xy_abs * ((pos[t][a] - base[t][a]) / scale[a]).powi(2);
            }
            total += w.pixel * corr.du[p][t].powi(2);
            if t + 1 < n {
                total += w.z_diff * ((pos[t + 1].z - pos[t].z) / scale[2]).powi(2);
                for a in 0..2 {
                    let d = pos[t + 1][a] - pos[t][a] - (base[t + 1][a] - base[t][a]);
                    total += w.xy_diff * (d / scale[a]).powi(2);
                }
            }
        }
    }
    total
}

fn random_correction(rng: &mut ChaCha8Rng, t: &Track2D, amp: f64) -> PixelCorrection {
    let mut c = PixelCorrection::zeros(t.n_points(), t.n_frames());
    for row in &mut c.du {
        for v in row.iter_mut() {
            *v = rng.random_range(-amp..amp);
        }
    }
    c
}

#[test]
fn residuals_match_term_by_term_objective() {
    let s = short_scene();
    let (t1, t2) = noisy(&s, 3);
    let cfg = SgrConfig::default();
    let w = SgrWeights::default();
    let base = baseline_triangulation(&t1, &t2, &s.rig, &s.frame).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let corr = random_correction(&mut rng, &t1, 1.0);
        let r = sgr_residuals(&corr, &t1, &t2, &s.rig, &s.frame, &base, &w, &cfg).unwrap();
        let e: f64 = r.iter().map(|v| v * v).sum();
        let oracle = direct_objective(&corr, &t1, &t2, &s, &w, cfg.scale_floor_mm);
        assert!((e - oracle).abs() < 1e-9 * oracle, "{e} vs {oracle}");
    }
}

#[test]
fn zero_correction_leaves_only_longitudinal_terms() {
    let s = short_scene();
    let (t1, t2) = noisy(&s, 9);
    let base = baseline_triangulation(&t1, &t2, &s.rig, &s.frame).unwrap();
    let n = t1.n_frames();
    let corr = PixelCorrection::zeros(1, n);
    let r = sgr_residuals(&corr, &t1, &t2, &s.rig, &s.frame, &base, &SgrWeights::default(), &SgrConfig::default())
        .unwrap();
    // Z abs, Z diff, X abs, Y abs, X diff, Y diff, pixel
    assert_eq!(r.len(), n + (n - 1) + 2 * n + 2 * (n - 1) + n);
    let (z, rest) = r.split_at(2 * n - 1);
    assert!(z.iter().any(|v| *v != 0.0));
    assert!(rest.iter().all(|v| *v == 0.0));
}

#[test]
fn pixel_term_alone_is_minimized_at_zero() {
    let s = short_scene();
    let (t1, t2) = noisy(&s, 1);
    let w = SgrWeights {
        z_abs: 0.0,
        z_diff: 0.0,
        xy_abs: 0.0,
        xy_diff: 0.0,
        pixel: 0.7,
    };
    let cfg = SgrConfig::default();
    let base = baseline_triangulation(&t1, &t2, &s.rig, &s.frame).unwrap();
    let corr = random_correction(&mut ChaCha8Rng::seed_from_u64(2), &t1, 2.0);
    let r = sgr_residuals(&corr, &t1, &t2, &s.rig, &s.frame, &base, &w, &cfg).unwrap();
    let e: f64 = r.iter().map(|v| v * v).sum();
    let expected: f64 = corr.du[0].iter().map(|d| 0.7 * d * d).sum();
    assert!((e - expected).abs() < 1e-12 * expected);
    let out = refine(&t1, &t2, &s.rig, &s.frame, &w, &cfg).unwrap();
    assert_eq!(out.correction.max_abs(), 0.0);
}

#[test]
fn noiseless_input_is_a_fixed_point() {
    let s = scenario("data2-mid").unwrap();
    let (t1, t2) = s.render(&NoiseSpec::none()).unwrap();
    let out = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
    assert!(out.converged);
    assert!(out.correction.max_abs() < 1e-3);
    let worst = out
        .trajectory
        .positions[0]
        .iter()
        .zip(&out.baseline.positions[0])
        .map(|(r, b)| (r * 1e3 - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst} mm");
}

#[test]
fn only_refined_horizontal_coordinate_moves() {
    let s = short_scene();
    let (t1, t2) = noisy(&s, 5);
    let out = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
    assert!(out.correction.max_abs() > 0.0);
    for (a, b) in t2.point(0).iter().zip(out.corrected.point(0)) {
        assert_eq!(a.v.to_bits(), b.v.to_bits());
    }
    for (a, (b, d)) in t2.point(0).iter().zip(out.corrected.point(0).iter().zip(&out.correction.du[0])) {
        assert_eq!(b.u, a.u + d);
    }
}

#[test]
fn objective_never_increases() {
    let s = short_scene();
    for seed in 0..4 {
        let (t1, t2) = noisy(&s, seed);
        let out = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
        assert!(out.objective_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.objective_history.last() < out.objective_history.first());
    }
}

#[test]
fn refinement_is_deterministic() {
    let s = short_scene();
    let (t1, t2) = noisy(&s, 11);
    let a = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
    let b = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
    assert_eq!(a.correction, b.correction);
    assert_eq!(a.objective_history, b.objective_history);
}

#[test]
fn longitudinal_noise_is_suppressed() {
    let s = short_scene();
    let (t1, t2) = noisy(&s, 21);
    let out = refine(&t1, &t2, &s.rig, &s.frame, &SgrWeights::default(), &SgrConfig::default()).unwrap();
    let rms = |f: &dyn Fn(usize) -> f64| {
        let n = t1.n_frames();
        let m = (0..n).map(f).sum::<f64>() / n as f64;
        ((0..n).map(|t| (f(t) - m).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let before = rms(&|t| out.baseline.positions[0][t].z);
    let after = rms(&|t| out.trajectory.positions[0][t].z * 1e3);
    assert!(after < 0.5 * before, "{after} vs {before}");
}
