//! Run configuration (TOML). Relative paths resolve against the directory
//! of the configuration file; unset input paths default to the files the
//! previous pipeline stage writes into the output directory.

use std::path::{Path, PathBuf};

use girder_core::sgr::{SgrConfig, SgrWeights};
use girder_core::signals::ReferenceConfig;
use girder_core::track::{Axis, ZeroReference};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::parse_toml;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub files: Files,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub triangulate: TriangulateConfig,
    #[serde(default)]
    pub sgr: SgrSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub sync: SyncConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
}

/// Optional explicit paths; see [`Loaded`] for the defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Files {
    pub tracks1: Option<PathBuf>,
    pub tracks2: Option<PathBuf>,
    pub rig: Option<PathBuf>,
    pub accel: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub refined: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub reference_synced: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub preset: String,
    /// Pixel noise, `[view][u, v]`.
    pub sigma_px: [[f64; 2]; 2],
    pub accel_rate_hz: f64,
    pub accel_lead_in_s: f64,
    pub accel_noise_g: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            preset: "data2-mid".into(),
            sigma_px: [[0.0, 0.0], [0.5, 0.0]],
            accel_rate_hz: 64.0,
            accel_lead_in_s: 3.0,
            accel_noise_g: 2e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriangulateConfig {
    pub zero_reference: ZeroReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgrSection {
    pub weights: SgrWeights,
    pub solver: SgrConfig,
}

/// Accelerometer column feeding one structure axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelMap {
    pub channel: girder_core::signals::AccelChannel,
    /// `-1` flips the channel.
    #[serde(default = "one")]
    pub sign: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceSection {
    #[serde(flatten)]
    pub chain: ReferenceConfig,
    /// Point id written to the reference file.
    pub point_id: u32,
    pub x: ChannelMap,
    pub y: ChannelMap,
    pub z: ChannelMap,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        use girder_core::signals::AccelChannel;
        Self {
            chain: ReferenceConfig::default(),
            point_id: 0,
            x: ChannelMap { channel: AccelChannel::Ax, sign: 1.0 },
            y: ChannelMap { channel: AccelChannel::Ay, sign: 1.0 },
            z: ChannelMap { channel: AccelChannel::Az, sign: 1.0 },
        }
    }
}

impl ReferenceSection {
    pub fn map(&self, axis: Axis) -> ChannelMap {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    Baseline,
    #[default]
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    pub max_lag_s: f64,
    /// Which prediction the reference is aligned to.
    pub prediction: Prediction,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            max_lag_s: 2.0,
            prediction: Prediction::Refined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub axes: Vec<Axis>,
    /// Omit the generation timestamp so reports are byte-reproducible.
    pub reproducible: bool,
    /// Amplitude-table cross-check input; when set, only the table is
    /// evaluated.
    pub amplitude_table: Option<PathBuf>,
    pub rppae_tolerance: f64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            axes: vec![Axis::X, Axis::Y],
            reproducible: false,
            amplitude_table: None,
            rppae_tolerance: 0.005,
        }
    }
}

/// `[reference]` flattens the chain parameters, which rules out serde's
/// unknown-field check, so its keys are checked here.
fn check_reference_keys(path: &Path) -> CliResult<()> {
    let doc: toml::Table = parse_toml(path)?;
    let Some(section) = doc.get("reference").and_then(|v| v.as_table()) else {
        return Ok(());
    };
    let known = toml::Table::try_from(ReferenceSection::default()).expect("reference section serializes");
    match section.keys().find(|k| !known.contains_key(*k)) {
        Some(k) => Err(CliError::input(
            path,
            format!("reference.{k}"),
            format!("unknown field, expected one of {}", known.keys().cloned().collect::<Vec<_>>().join(", ")),
        )),
        None => Ok(()),
    }
}

/// A loaded configuration with its resolved locations.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Loaded {
    pub fn load(path: &Path, out_override: Option<&Path>) -> CliResult<Self> {
        let config: RunConfig = parse_toml(path)?;
        check_reference_keys(path)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out_dir = match (out_override, &config.output_dir) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => base_dir.join(o),
            (None, None) => base_dir.join("out"),
        };
        let loaded = Self {
            path: path.to_path_buf(),
            config,
            base_dir,
            out_dir,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> CliResult<()> {
        let c = &self.config;
        let bad = |field: &str, message: String| Err(CliError::input(&self.path, field, message));
        if c.evaluate.axes.is_empty() {
            return bad("evaluate.axes", "at least one axis is required".into());
        }
        if !(c.sync.max_lag_s > 0.0) {
            return bad("sync.max_lag_s", format!("must be positive, got {}", c.sync.max_lag_s));
        }
        if c.simulate.sigma_px.iter().flatten().any(|s| !(*s >= 0.0)) {
            return bad("simulate.sigma_px", "noise sigma must be non-negative".into());
        }
        for axis in Axis::ALL {
            let sign = c.reference.map(axis).sign;
            if sign != 1.0 && sign != -1.0 {
                return bad(
                    &format!("reference.{}.sign", axis.label().to_lowercase()),
                    format!("must be 1 or -1, got {sign}"),
                );
            }
        }
        c.sgr.weights.validate().map_err(|e| CliError::core(&self.path, "sgr.weights", e))?;
        c.sgr.solver.validate().map_err(|e| CliError::core(&self.path, "sgr.solver", e))?;
        Ok(())
    }

    fn resolve(&self, explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
        match explicit {
            Some(p) => self.base_dir.join(p),
            None => self.out_dir.join(default_name),
        }
    }

    pub fn tracks(&self, view: usize) -> PathBuf {
        match view {
            0 => self.resolve(&self.config.files.tracks1, "view1_tracks.csv"),
            _ => self.resolve(&self.config.files.tracks2, "view2_tracks.csv"),
        }
    }

    pub fn rig(&self) -> PathBuf {
        self.resolve(&self.config.files.rig, "rig.toml")
    }

    pub fn accel(&self) -> PathBuf {
        self.resolve(&self.config.files.accel, "accel.csv")
    }

    pub fn baseline(&self) -> PathBuf {
        self.resolve(&self.config.files.baseline, "displacement_baseline.csv")
    }

    pub fn refined(&self) -> PathBuf {
        self.resolve(&self.config.files.refined, "displacement_refined.csv")
    }

    pub fn reference(&self) -> PathBuf {
        self.resolve(&self.config.files.reference, "reference.csv")
    }

    pub fn reference_synced(&self) -> PathBuf {
        self.resolve(&self.config.files.reference_synced, "reference_synced.csv")
    }

    pub fn amplitude_table(&self) -> Option<PathBuf> {
        self.config.evaluate.amplitude_table.as_ref().map(|p| self.base_dir.join(p))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
