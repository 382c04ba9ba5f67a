//! Seeded synthetic stereo-vibration scenes.
//!
//! Ground-truth motion is a sum of (optionally decaying) sinusoids per
//! structure axis around an anchor point. Rendering maps it back to the
//! reference camera frame, projects into both views and adds Gaussian pixel
//! noise from a named, seedable generator (ChaCha8).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{
    from_structure_frame, structure_frame_from_layout, Camera, CameraIntrinsics, CameraPose,
    PixelPoint, Point3, StereoRig, StructureFrame, VerticalSign,
};
use crate::signals::{AccelRecord, STANDARD_GRAVITY};
use crate::track::{Track2D, Trajectory3D};
use crate::{Error, Result};

/// One tone. The instantaneous frequency starts at `frequency_hz` and
/// changes linearly at `sweep_hz_per_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude_mm: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
    #[serde(default)]
    pub sweep_hz_per_s: f64,
}

impl Harmonic {
    pub fn new(amplitude_mm: f64, frequency_hz: f64, phase_rad: f64) -> Self {
        Self {
            amplitude_mm,
            frequency_hz,
            phase_rad,
            sweep_hz_per_s: 0.0,
        }
    }

    pub fn swept(self, sweep_hz_per_s: f64) -> Self {
        Self { sweep_hz_per_s, ..self }
    }

    /// Phase and its first two time derivatives.
    fn phase(&self, t: f64) -> [f64; 3] {
        let (f, b) = (self.frequency_hz, self.sweep_hz_per_s);
        [
            2.0 * PI * (f * t + 0.5 * b * t * t) + self.phase_rad,
            2.0 * PI * (f + b * t),
            2.0 * PI * b,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    #[serde(default)]
    pub lateral: Vec<Harmonic>,
    #[serde(default)]
    pub vertical: Vec<Harmonic>,
    #[serde(default)]
    pub longitudinal: Vec<Harmonic>,
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Exponential envelope `exp(-decay * t)`; zero for steady motion.
    #[serde(default)]
    pub decay_per_s: f64,
    /// Raised-cosine taper at both ends so the motion starts and stops at
    /// rest; zero runs the tones at full amplitude throughout.
    #[serde(default)]
    pub ramp_s: f64,
}

impl MotionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !(self.rate_hz > 0.0) {
            return Err(Error::Domain("duration and rate must be positive".into()));
        }
        if !(self.decay_per_s >= 0.0) || !(self.ramp_s >= 0.0) {
            return Err(Error::Domain("decay and ramp must be non-negative".into()));
        }
        if 2.0 * self.ramp_s > self.duration_s {
            return Err(Error::Domain("the two ramps must fit inside the duration".into()));
        }
        for h in self.axes().iter().flat_map(|a| a.iter()) {
            if !(h.amplitude_mm >= 0.0) {
                return Err(Error::Domain(format!("negative amplitude {}", h.amplitude_mm)));
            }
            let end = h.frequency_hz + h.sweep_hz_per_s * self.duration_s;
            for f in [h.frequency_hz, end] {
                if !(f >= 0.0 && f < self.rate_hz / 2.0) {
                    return Err(Error::Domain(format!(
                        "frequency {f} Hz must lie in [0, {}) Hz",
                        self.rate_hz / 2.0
                    )));
                }
            }
        }
        Ok(())
    }

    fn axes(&self) -> [&[Harmonic]; 3] {
        [&self.lateral, &self.vertical, &self.longitudinal]
    }

    pub fn n_frames(&self) -> usize {
        (self.duration_s * self.rate_hz).round() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_frames()).map(|k| k as f64 / self.rate_hz).collect()
    }

    /// Envelope and its first two time derivatives.
    fn envelope(&self, t: f64) -> [f64; 3] {
        let c = self.decay_per_s;
        let g = (-c * t).exp();
        let k = PI / self.ramp_s;
        let rise = |u: f64| ((1.0 - (k * u).cos()) / 2.0, k * (k * u).sin() / 2.0, k * k * (k * u).cos() / 2.0);
        let (r, r1, r2) = if t < self.ramp_s {
            rise(t)
        } else if t > self.duration_s - self.ramp_s {
            let (r, r1, r2) = rise(self.duration_s - t);
            (r, -r1, r2)
        } else {
            (1.0, 0.0, 0.0)
        };
        [g * r, g * (r1 - c * r), g * (r2 - 2.0 * c * r1 + c * c * r)]
    }

    /// Displacement (mm) at time `t`, per structure axis.
    pub fn displacement_mm(&self, t: f64) -> Vector3<f64> {
        let env = self.envelope(t)[0];
        let axis = |hs: &[Harmonic]| -> f64 {
            hs.iter().map(|h| h.amplitude_mm * h.phase(t)[0].sin()).sum::<f64>() * env
        };
        let [x, y, z] = self.axes();
        Vector3::new(axis(x), axis(y), axis(z))
    }

    /// Analytic second derivative of [`Self::displacement_mm`], m/s^2.
    pub fn acceleration_ms2(&self, t: f64) -> Vector3<f64> {
        let [e, e1, e2] = self.envelope(t);
        let axis = |hs: &[Harmonic]| -> f64 {
            hs.iter()
                .map(|h| {
                    let [ph, w, w1] = h.phase(t);
                    let (s, c) = ph.sin_cos();
                    h.amplitude_mm * ((e2 - e * w * w) * s + (2.0 * e1 * w + e * w1) * c)
                })
                .sum::<f64>()
                * 1e-3
        };
        let [x, y, z] = self.axes();
        Vector3::new(axis(x), axis(y), axis(z))
    }
}

/// Ground-truth structure-frame trajectory (meters) of one anchored point.
pub fn make_motion(spec: &MotionSpec, anchor: Point3) -> Result<Trajectory3D> {
    make_motion_points(spec, &[(0, anchor)])
}

/// Same motion applied to several anchored points.
pub fn make_motion_points(spec: &MotionSpec, anchors: &[(u32, Point3)]) -> Result<Trajectory3D> {
    spec.validate()?;
    let times = spec.times();
    let positions = anchors
        .iter()
        .map(|(_, a)| times.iter().map(|&t| a + spec.displacement_mm(t) * 1e-3).collect())
        .collect();
    Ok(Trajectory3D {
        times,
        point_ids: anchors.iter().map(|(id, _)| *id).collect(),
        positions,
    })
}

/// Gaussian pixel noise, `sigma_px[view][axis]` with axis 0 = u, 1 = v.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_px: [[f64; 2]; 2],
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Noise on the horizontal coordinate of view 2 only.
    pub fn view2_horizontal(sigma: f64, seed: u64) -> Self {
        Self {
            sigma_px: [[0.0, 0.0], [sigma, 0.0]],
            seed,
        }
    }
}

/// Projects a structure-frame trajectory into both views of a metric rig.
pub fn render_tracks(
    rig: &StereoRig,
    frame: &StructureFrame,
    traj: &Trajectory3D,
    noise: &NoiseSpec,
) -> Result<(Track2D, Track2D)> {
    if noise.sigma_px.iter().flatten().any(|s| !(*s >= 0.0)) {
        return Err(Error::Domain("noise sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut views = Vec::with_capacity(2);
    for view in 0..2 {
        let cam = rig.camera(view);
        let [su, sv] = noise.sigma_px[view];
        let mut pixels = Vec::with_capacity(traj.n_points());
        for row in &traj.positions {
            let mut out = Vec::with_capacity(row.len());
            for (t, x) in row.iter().enumerate() {
                let xc = from_structure_frame(frame, x)?;
                let p = cam.project(&xc).map_err(|e| e.at_frame(t))?;
                let nu: f64 = StandardNormal.sample(&mut rng);
                let nv: f64 = StandardNormal.sample(&mut rng);
                out.push(PixelPoint::new(p.u + su * nu, p.v + sv * nv));
            }
            pixels.push(out);
        }
        views.push(Track2D::new(traj.times.clone(), traj.point_ids.clone(), pixels)?);
    }
    let v2 = views.pop().unwrap();
    let v1 = views.pop().unwrap();
    Ok((v1, v2))
}

/// Tri-axial accelerometer record (g) of the motion, sampled at `rate_hz`
/// with `lead_in_s` seconds of rest before the motion starts. Gravity acts
/// on the vertical channel; record time 0 is the start of the lead-in.
pub fn render_accel(
    spec: &MotionSpec,
    rate_hz: f64,
    lead_in_s: f64,
    noise_g: f64,
    vertical_sign: VerticalSign,
    seed: u64,
) -> Result<AccelRecord> {
    spec.validate()?;
    if !(noise_g >= 0.0) || !(lead_in_s >= 0.0) {
        return Err(Error::Domain("noise and lead-in must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, noise_g).map_err(|e| Error::Domain(e.to_string()))?;
    let n = ((lead_in_s + spec.duration_s) * rate_hz).round() as usize + 1;
    let (mut t, mut ax, mut ay, mut az) = (vec![], vec![], vec![], vec![]);
    for k in 0..n {
        let tk = k as f64 / rate_hz;
        let tm = tk - lead_in_s;
        let a = if tm >= 0.0 { spec.acceleration_ms2(tm) } else { Vector3::zeros() };
        t.push(tk);
        ax.push(a.x / STANDARD_GRAVITY + dist.sample(&mut rng));
        ay.push(a.y / STANDARD_GRAVITY + vertical_sign.value() + dist.sample(&mut rng));
        az.push(a.z / STANDARD_GRAVITY + dist.sample(&mut rng));
    }
    AccelRecord::new(t, ax, ay, az)
}

/// Measurements that fix the structure frame of a rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub perpendicular_distance_m: f64,
    pub longitudinal_distance_m: f64,
    /// Height of the target above the reference camera.
    pub target_height_m: f64,
}

/// Rig geometry shared by all presets.
const FOCAL_PX: f64 = 2800.0;
const IMAGE_SIZE: (f64, f64) = (3840.0, 2160.0);
const DISTORTION: [f64; 5] = [-0.02, 0.004, 0.0, 0.0, 0.0];
const SPAN_M: f64 = 20.0;
const TARGET_HEIGHT_M: f64 = 0.8;
/// Fraction of full convergence of camera 2 toward the target.
const CONVERGENCE: f64 = 0.8;

struct RigPreset {
    name: &'static str,
    baseline_m: f64,
    perpendicular_m: f64,
}

const RIG_PRESETS: [RigPreset; 3] = [
    RigPreset { name: "data1", baseline_m: 3.96, perpendicular_m: 3.5 },
    RigPreset { name: "data2", baseline_m: 4.00, perpendicular_m: 3.0 },
    RigPreset { name: "data3", baseline_m: 4.97, perpendicular_m: 3.2 },
];

/// (name, rig preset, span fraction, vertical p-p mm, lateral p-p mm)
const SCENARIOS: [(&str, &str, f64, f64, f64); 6] = [
    ("data1-mid", "data1", 0.5, 11.94, 9.70),
    ("data1-threequarter", "data1", 0.75, 8.30, 7.79),
    ("data2-quarter", "data2", 0.25, 12.15, 4.30),
    ("data2-mid", "data2", 0.5, 17.37, 7.28),
    ("data3-quarter", "data3", 0.25, 7.54, 1.54),
    ("data3-mid", "data3", 0.5, 10.95, 2.24),
];

pub fn rig_preset_names() -> Vec<&'static str> {
    RIG_PRESETS.iter().map(|p| p.name).collect()
}

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.0).collect()
}

fn unknown(name: &str) -> Error {
    let mut valid: Vec<&str> = rig_preset_names();
    valid.extend(scenario_names());
    Error::UnknownPreset {
        name: name.to_string(),
        valid: valid.join(", "),
    }
}

/// Builds a rig whose reference camera looks level at the target at
/// `longitudinal_m` along the bridge; camera 2 stands `baseline_m` to the
/// right of camera 1 and is turned toward the target.
pub fn build_rig(
    baseline_m: f64,
    perpendicular_m: f64,
    longitudinal_m: f64,
) -> Result<(StereoRig, StructureFrame, Layout)> {
    let layout = Layout {
        perpendicular_distance_m: perpendicular_m,
        longitudinal_distance_m: longitudinal_m,
        target_height_m: TARGET_HEIGHT_M,
    };
    let frame = structure_frame_from_layout(perpendicular_m, longitudinal_m, VerticalSign::Down)?;
    let depth = perpendicular_m.hypot(longitudinal_m);
    let intr = CameraIntrinsics {
        fx: FOCAL_PX,
        fy: FOCAL_PX,
        cx: IMAGE_SIZE.0 / 2.0,
        cy: IMAGE_SIZE.1 / 2.0,
        skew: 0.0,
        dist: DISTORTION,
    };
    let center2 = Vector3::new(baseline_m, 0.0, 0.0);
    let z2 = Vector3::new(-CONVERGENCE * baseline_m, 0.0, depth).normalize();
    let y2 = Vector3::new(0.0, 1.0, 0.0);
    let x2 = y2.cross(&z2);
    let r2 = Matrix3::from_rows(&[x2.transpose(), y2.transpose(), z2.transpose()]);
    let pose2 = CameraPose::new(r2, -(r2 * center2))?;
    let rig = StereoRig::new(
        Camera::new(intr, CameraPose::identity()),
        Camera::new(intr, pose2),
        baseline_m,
    )?;
    Ok((rig, frame, layout))
}

/// Rig preset (`data1`, `data2`, `data3`) aimed at mid-span.
pub fn default_rig(preset: &str) -> Result<(StereoRig, StructureFrame)> {
    let p = RIG_PRESETS
        .iter()
        .find(|p| p.name == preset)
        .ok_or_else(|| unknown(preset))?;
    let (rig, frame, _) = build_rig(p.baseline_m, p.perpendicular_m, 0.5 * SPAN_M)?;
    Ok((rig, frame))
}

/// Complete synthetic scene: rig, frame, target anchor and motion.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub rig: StereoRig,
    pub frame: StructureFrame,
    pub layout: Layout,
    pub anchors: Vec<(u32, Point3)>,
    pub motion: MotionSpec,
}

impl Scenario {
    pub fn ground_truth(&self) -> Result<Trajectory3D> {
        make_motion_points(&self.motion, &self.anchors)
    }

    pub fn render(&self, noise: &NoiseSpec) -> Result<(Track2D, Track2D)> {
        render_tracks(&self.rig, &self.frame, &self.ground_truth()?, noise)
    }
}

/// Scenario tones as (start Hz, end Hz, phase). A slow linear sweep keeps
/// the motion close to sinusoidal while no shifted copy of the waveform
/// lines up with itself inside a sync search window.
const VERTICAL_TONE: (f64, f64, f64) = (1.8, 2.8, 0.0);
const LATERAL_TONE: (f64, f64, f64) = (1.6, 2.1, 0.4);
/// Scenario motion builds up from rest and dies out over this long.
const SCENARIO_RAMP_S: f64 = 1.0;
const SCENARIO_DURATION_S: f64 = 16.0;

/// Rescales the tones of one axis so the sampled peak-to-peak equals `pp`.
fn scale_to_peak_to_peak(spec: &mut MotionSpec, axis: usize, pp: f64) {
    let times = spec.times();
    let values: Vec<f64> = times.iter().map(|&t| spec.displacement_mm(t)[axis]).collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let k = pp / (hi - lo);
    let tones = if axis == 0 { &mut spec.lateral } else { &mut spec.vertical };
    for h in tones {
        h.amplitude_mm *= k;
    }
}

fn tone((start, end, phase): (f64, f64, f64)) -> Harmonic {
    Harmonic::new(1.0, start, phase).swept((end - start) / SCENARIO_DURATION_S)
}

/// Scenario preset, or a rig preset with its mid-span scenario.
///
/// Each scenario moves with one slowly swept tone per axis (vertical
/// 1.8 to 2.8 Hz, lateral 1.6 to 2.1 Hz) tapered to rest at both ends,
/// scaled so the sampled peak-to-peak equals the field amplitude of that
/// span location. No longitudinal motion; 16 s at
/// 30 Hz.
pub fn scenario(name: &str) -> Result<Scenario> {
    let (rig_name, fraction, vertical_pp, lateral_pp) = match SCENARIOS.iter().find(|s| s.0 == name) {
        Some(s) => (s.1, s.2, s.3, s.4),
        None => {
            let mid = format!("{name}-mid");
            match SCENARIOS.iter().find(|s| s.0 == mid) {
                Some(s) => (s.1, s.2, s.3, s.4),
                None => return Err(unknown(name)),
            }
        }
    };
    let p = RIG_PRESETS.iter().find(|p| p.name == rig_name).expect("scenario rig exists");
    let longitudinal = fraction * SPAN_M;
    let (rig, frame, layout) = build_rig(p.baseline_m, p.perpendicular_m, longitudinal)?;
    let anchor = Point3::new(p.perpendicular_m, -TARGET_HEIGHT_M, longitudinal);
    let mut motion = MotionSpec {
        lateral: vec![tone(LATERAL_TONE)],
        vertical: vec![tone(VERTICAL_TONE)],
        longitudinal: vec![],
        duration_s: SCENARIO_DURATION_S,
        rate_hz: 30.0,
        decay_per_s: 0.0,
        ramp_s: SCENARIO_RAMP_S,
    };
    scale_to_peak_to_peak(&mut motion, 0, lateral_pp);
    scale_to_peak_to_peak(&mut motion, 1, vertical_pp);
    Ok(Scenario {
        name: name.to_string(),
        rig,
        frame,
        layout,
        anchors: vec![(0, anchor)],
        motion,
    })
}

/// One random calibrated two-view scene with a point visible in both views.
#[derive(Debug, Clone)]
pub struct RandomScene {
    pub rig: StereoRig,
    /// Camera-1 frame, meters.
    pub point: Point3,
}

/// Draws a scene with depth 5-50 m, baseline 1-10 m, focal length
/// 500-4000 px and nonzero rad-tan distortion. The point projects within a
/// normalized radius of 0.6 in both views.
pub fn random_scene<R: Rng + ?Sized>(rng: &mut R) -> Result<RandomScene> {
    loop {
        let depth = rng.random_range(5.0..50.0);
        let baseline = rng.random_range(1.0..10.0);
        let mut intrinsics = || -> Result<CameraIntrinsics> {
            let f = rng.random_range(500.0..4000.0);
            CameraIntrinsics::new(
                f,
                f * rng.random_range(0.98..1.02),
                rng.random_range(600.0..2000.0),
                rng.random_range(400.0..1100.0),
                rng.random_range(-0.5..0.5),
                [
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-1e-3..1e-3),
                    rng.random_range(-1e-3..1e-3),
                    rng.random_range(-0.01..0.01),
                ],
            )
        };
        let (i1, i2) = (intrinsics()?, intrinsics()?);
        let point = Point3::new(
            depth * rng.random_range(-0.3..0.3),
            depth * rng.random_range(-0.3..0.3),
            depth,
        );
        let heading = rng.random_range(-PI..PI);
        let dir = Vector3::new(heading.cos(), 0.2 * rng.random_range(-1.0..1.0), 0.3 * heading.sin());
        let center2 = dir.normalize() * baseline;
        let to_point = point - center2;
        let yaw = to_point.x.atan2(to_point.z) * rng.random_range(0.0..1.0);
        let r = nalgebra::Rotation3::from_euler_angles(
            rng.random_range(-0.05..0.05),
            yaw,
            rng.random_range(-0.05..0.05),
        );
        // camera-2 axes in the camera-1 frame are the columns of r
        let r2 = r.matrix().transpose();
        let pose2 = CameraPose::new(r2, -(r2 * center2))?;
        let xc2 = pose2.transform(&point);
        if xc2.z <= 0.5 || (xc2.x / xc2.z).hypot(xc2.y / xc2.z) > 0.6 {
            continue;
        }
        let rig = StereoRig::new(Camera::new(i1, CameraPose::identity()), Camera::new(i2, pose2), baseline)?;
        return Ok(RandomScene { rig, point });
    }
}
