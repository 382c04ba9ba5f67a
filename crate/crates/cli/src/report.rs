use std::path::Path;

use girder_core::metrics::{rppae_from_amplitudes, MetricReport};
use girder_core::track::Axis;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    pub pred_without_sgr_mm: Option<f64>,
    pub pred_with_sgr_mm: f64,
    pub reference_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub point_id: u32,
    pub axis: Axis,
    pub with_sgr: MetricReport,
    pub without_sgr: Option<MetricReport>,
    pub peak_to_peak: Amplitudes,
}

/// One row of the amplitude-table cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeCheck {
    pub label: String,
    pub axis: Axis,
    pub variant: String,
    pub pred_mm: f64,
    pub reference_mm: f64,
    pub rppae: f64,
    pub expected_rppae: Option<f64>,
    pub abs_difference: Option<f64>,
    pub within_tolerance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub tool: String,
    pub version: String,
    pub reproducible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
    pub seed: Option<u64>,
    pub sync_lag_s: Option<f64>,
    pub entries: Vec<ReportEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub amplitude_checks: Vec<AmplitudeCheck>,
    /// Echo of the run configuration.
    pub config: serde_json::Value,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(path: &Path, text: &str) -> CliResult<Self> {
        serde_json::from_str(text)
            .map_err(|e| CliError::input(path, format!("line {}", e.line()), e.to_string()))
    }
}

#[derive(Debug, Deserialize)]
struct AmplitudeRow {
    label: String,
    axis: Axis,
    variant: String,
    pred_mm: f64,
    reference_mm: f64,
    expected_rppae: Option<f64>,
}

pub const AMPLITUDE_HEADER: [&str; 6] = ["label", "axis", "variant", "pred_mm", "reference_mm", "expected_rppae"];

/// Reads an amplitude table and recomputes each relative peak-to-peak
/// error. `expected_rppae` is compared at the given tolerance when present.
pub fn amplitude_checks(path: &Path, tolerance: f64) -> CliResult<Vec<AmplitudeCheck>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| CliError::input(path, "header", e.to_string()))?;
    if header.iter().ne(AMPLITUDE_HEADER.iter().copied()) {
        return Err(CliError::input(path, "header", format!("expected `{}`", AMPLITUDE_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<AmplitudeRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::input(path, format!("line {line}"), e.to_string()))?;
        let rppae = rppae_from_amplitudes(row.pred_mm, row.reference_mm)
            .map_err(|e| CliError::core(path, format!("line {line}, field `reference_mm`"), e))?;
        let diff = row.expected_rppae.map(|e| (rppae - e).abs());
        out.push(AmplitudeCheck {
            label: row.label,
            axis: row.axis,
            variant: row.variant,
            pred_mm: row.pred_mm,
            reference_mm: row.reference_mm,
            rppae,
            expected_rppae: row.expected_rppae,
            abs_difference: diff,
            within_tolerance: diff.map(|d| d <= tolerance),
        });
    }
    if out.is_empty() {
        return Err(CliError::input(path, "label", "amplitude table has no rows"));
    }
    Ok(out)
}
