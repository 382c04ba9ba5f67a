use girder_core::geometry::{recover_scale, Camera, StereoRig};
use girder_core::sgr::{baseline_trajectory, baseline_triangulation};
use girder_core::synth::{scenario, NoiseSpec};
use girder_core::track::{Axis, ZeroReference};

#[test]
fn noiseless_render_triangulates_to_ground_truth() {
    for name in girder_core::synth::scenario_names() {
        let s = scenario(name).unwrap();
        let gt = s.ground_truth().unwrap();
        let (t1, t2) = s.render(&NoiseSpec::none()).unwrap();
        let base = baseline_triangulation(&t1, &t2, &s.rig, &s.frame).unwrap();
        let traj = baseline_trajectory(&t1, &base);
        for axis in Axis::ALL {
            let a = gt.displacement_mm(0, axis, ZeroReference::FirstSample);
            let b = traj.displacement_mm(0, axis, ZeroReference::FirstSample);
            let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-6, "{name} {axis}: {worst} mm");
        }
    }
}

#[test]
fn doubling_calibrated_translation_changes_nothing_after_scaling() {
    let s = scenario("data1-mid").unwrap();
    let (t1, t2) = s.render(&NoiseSpec::view2_horizontal(0.3, 4)).unwrap();
    let pose = s.rig.cam2().pose;
    let doubled = StereoRig::new(
        *s.rig.cam1(),
        Camera::new(s.rig.cam2().intrinsics, pose.with_translation(pose.translation() * 2.0)),
        s.rig.measured_baseline(),
    )
    .unwrap();
    assert!((recover_scale(&doubled).unwrap().0 - 0.5).abs() < 1e-15);
    let a = baseline_triangulation(&t1, &t2, &s.rig, &s.frame).unwrap();
    let b = baseline_triangulation(&t1, &t2, &doubled, &s.frame).unwrap();
    for (p, q) in a.positions[0].iter().zip(&b.positions[0]) {
        assert!((p - q).norm() < 1e-9);
    }
}

#[test]
fn closure_holds_for_random_motion() {
    use girder_core::synth::{Harmonic, MotionSpec};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let names = girder_core::synth::scenario_names();
    let tones = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Harmonic> {
        (0..rng.random_range(0..4))
            .map(|_| Harmonic::new(rng.random_range(0.0..20.0), rng.random_range(0.1..14.0), rng.random_range(-3.0..3.0)))
            .collect()
    };
    for i in 0..100 {
        let mut s = scenario(names[i % names.len()]).unwrap();
        let duration_s = rng.random_range(0.5..3.0);
        s.motion = MotionSpec {
            lateral: tones(&mut rng),
            vertical: tones(&mut rng),
            longitudinal: tones(&mut rng),
            duration_s,
            rate_hz: 30.0,
            decay_per_s: rng.random_range(0.0..0.5),
            ramp_s: rng.random_range(0.0..0.5) * duration_s,
        };
        let gt = s.ground_truth().unwrap();
        let (t1, t2) = s.render(&NoiseSpec::none()).unwrap();
        let base = baseline_triangulation(&t1, &t2, &s.rig, &s.frame).unwrap();
        for (g, b) in gt.positions[0].iter().zip(&base.positions[0]) {
            assert!((g * 1e3 - b).norm() < 1e-6, "case {i}: {:e} mm", (g * 1e3 - b).norm());
        }
    }
}
