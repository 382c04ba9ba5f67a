//! Rig document: both cameras, the measured baseline and the in-situ
//! layout that fixes the structure frame.

use std::path::Path;

use girder_core::geometry::{
    structure_frame_from_layout_with_station, Camera, CameraIntrinsics, CameraPose, StereoRig,
    StructureFrame, VerticalSign,
};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};
use crate::io::{atomic_write, parse_toml};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    #[serde(default)]
    pub reference: bool,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
    #[serde(default)]
    pub dist: [f64; 5],
    /// World-to-camera rotation, row-major.
    #[serde(rename = "R")]
    pub r: [f64; 9],
    /// World-to-camera translation, meters.
    pub t: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigDocument {
    pub measured_baseline_m: f64,
    pub perpendicular_distance_m: f64,
    pub longitudinal_distance_m: f64,
    #[serde(default)]
    pub camera_station_m: f64,
    #[serde(default)]
    pub vertical_sign: VerticalSign,
    pub camera: Vec<CameraEntry>,
}

impl CameraEntry {
    fn from_camera(cam: &Camera, reference: bool) -> Self {
        let i = &cam.intrinsics;
        let r = cam.pose.rotation();
        let t = cam.pose.translation();
        Self {
            reference,
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            skew: i.skew,
            dist: i.dist,
            r: [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            t: [t.x, t.y, t.z],
        }
    }

    fn to_camera(&self, path: &Path, field: &str) -> CliResult<Camera> {
        let intrinsics = CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.skew, self.dist)
            .context(path, field)?;
        let pose = CameraPose::new(Matrix3::from_row_slice(&self.r), Vector3::from(self.t))
            .context(path, &format!("{field}.R"))?;
        Ok(Camera::new(intrinsics, pose))
    }
}

impl RigDocument {
    pub fn from_rig(
        rig: &StereoRig,
        perpendicular_distance_m: f64,
        longitudinal_distance_m: f64,
        vertical_sign: VerticalSign,
    ) -> Self {
        Self {
            measured_baseline_m: rig.measured_baseline(),
            perpendicular_distance_m,
            longitudinal_distance_m,
            camera_station_m: 0.0,
            vertical_sign,
            camera: vec![
                CameraEntry::from_camera(rig.cam1(), true),
                CameraEntry::from_camera(rig.cam2(), false),
            ],
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        parse_toml(path)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = toml::to_string(self)
            .map_err(|e| CliError::input(path, "document", e.to_string()))?;
        atomic_write(path, text.as_bytes())
    }

    /// Validated rig (reference camera first) and structure frame.
    pub fn to_rig(&self, path: &Path) -> CliResult<(StereoRig, StructureFrame)> {
        if self.camera.len() != 2 {
            return Err(CliError::input(
                path,
                "camera",
                format!("exactly 2 cameras are required, found {}", self.camera.len()),
            ));
        }
        let refs: Vec<usize> = (0..2).filter(|&i| self.camera[i].reference).collect();
        if refs.len() != 1 {
            return Err(CliError::input(
                path,
                "camera.reference",
                format!("exactly one camera must be the reference, found {}", refs.len()),
            ));
        }
        let (r, o) = (refs[0], 1 - refs[0]);
        let cam1 = self.camera[r].to_camera(path, &format!("camera[{r}]"))?;
        let cam2 = self.camera[o].to_camera(path, &format!("camera[{o}]"))?;
        if !cam1.pose.is_identity() {
            return Err(CliError::input(
                path,
                format!("camera[{r}].R"),
                "the reference camera must have R = I and t = 0",
            ));
        }
        let rig = StereoRig::new(cam1, cam2, self.measured_baseline_m).context(path, "measured_baseline_m")?;
        let frame = structure_frame_from_layout_with_station(
            self.perpendicular_distance_m,
            self.longitudinal_distance_m,
            self.camera_station_m,
            self.vertical_sign,
        )
        .context(path, "perpendicular_distance_m")?;
        Ok((rig, frame))
    }
}
