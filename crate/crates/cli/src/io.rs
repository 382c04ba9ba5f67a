//! CSV and document I/O. Every write goes to a temporary file in the
//! destination directory and is renamed into place.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use girder_core::geometry::PixelPoint;
use girder_core::signals::AccelRecord;
use girder_core::track::{Axis, Track2D, Trajectory3D, ZeroReference};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

pub const TRACK_HEADER: [&str; 5] = ["point_id", "frame_index", "time_s", "u_px", "v_px"];
pub const ACCEL_HEADER: [&str; 4] = ["time_s", "ax_g", "ay_g", "az_g"];
pub const DISPLACEMENT_HEADER: [&str; 5] = ["point_id", "time_s", "x_mm", "y_mm", "z_mm"];

pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Parses a TOML document, reporting the line of any error.
pub fn parse_toml<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| {
        let field = match e.span() {
            Some(span) => format!("line {}", text[..span.start].matches('\n').count() + 1),
            None => "document".to_string(),
        };
        CliError::input(path, field, e.message().trim().to_string())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(path, "document", e.to_string()))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(path, format!("line {}", e.line()), e.to_string()))
}

fn reader(path: &Path, expected: &[&str]) -> CliResult<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| CliError::input(path, "header", e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(CliError::input(
            path,
            "header",
            format!("expected `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

fn records<T: DeserializeOwned>(path: &Path, expected: &[&str]) -> CliResult<Vec<T>> {
    let mut rdr = reader(path, expected)?;
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                let field = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err
                        .field()
                        .and_then(|i| expected.get(i as usize))
                        .map(|f| format!("line {line}, field `{f}`"))
                        .unwrap_or_else(|| format!("line {line}")),
                    _ => format!("line {line}"),
                };
                CliError::input(path, field, e.to_string())
            })
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let err = |e: csv::Error| CliError::input(path, "record", e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(path, "record", e.to_string()))?;
    atomic_write(path, &bytes)
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackRow {
    point_id: u32,
    frame_index: usize,
    time_s: f64,
    u_px: f64,
    v_px: f64,
}

/// Reads a track CSV. Points keep the order of their first appearance;
/// every point must cover the same frames with the same times.
pub fn read_tracks(path: &Path) -> CliResult<Track2D> {
    let rows: Vec<TrackRow> = records(path, &TRACK_HEADER)?;
    let mut order = Vec::new();
    let mut by_point: BTreeMap<u32, Vec<&TrackRow>> = BTreeMap::new();
    for row in &rows {
        let entry = by_point.entry(row.point_id).or_default();
        if entry.is_empty() {
            order.push(row.point_id);
        }
        entry.push(row);
    }
    if order.is_empty() {
        return Err(CliError::input(path, "point_id", "no track rows"));
    }
    let mut times: Option<Vec<f64>> = None;
    let mut pixels = Vec::new();
    for id in &order {
        let mut pts = by_point.remove(id).unwrap_or_default();
        pts.sort_by_key(|r| r.frame_index);
        if pts.iter().enumerate().any(|(i, r)| r.frame_index != i) {
            return Err(CliError::input(
                path,
                "frame_index",
                format!("point {id}: frame indices must be 0..n without gaps or repeats"),
            ));
        }
        let t: Vec<f64> = pts.iter().map(|r| r.time_s).collect();
        match &times {
            None => times = Some(t),
            Some(t0) if *t0 != t => {
                return Err(CliError::input(
                    path,
                    "time_s",
                    format!("point {id} is sampled at different times than point {}", order[0]),
                ))
            }
            _ => {}
        }
        pixels.push(pts.iter().map(|r| PixelPoint::new(r.u_px, r.v_px)).collect());
    }
    Track2D::new(times.unwrap_or_default(), order, pixels).context(path, "time_s")
}

pub fn write_tracks(path: &Path, tracks: &Track2D) -> CliResult<()> {
    let rows = tracks.point_ids().iter().enumerate().flat_map(|(p, &id)| {
        tracks.point(p).iter().enumerate().map(move |(k, px)| TrackRow {
            point_id: id,
            frame_index: k,
            time_s: tracks.times()[k],
            u_px: px.u,
            v_px: px.v,
        })
    });
    write_csv(path, &TRACK_HEADER, rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct AccelRow {
    time_s: f64,
    ax_g: f64,
    ay_g: f64,
    az_g: f64,
}

pub fn read_accel(path: &Path) -> CliResult<AccelRecord> {
    let rows: Vec<AccelRow> = records(path, &ACCEL_HEADER)?;
    AccelRecord::new(
        rows.iter().map(|r| r.time_s).collect(),
        rows.iter().map(|r| r.ax_g).collect(),
        rows.iter().map(|r| r.ay_g).collect(),
        rows.iter().map(|r| r.az_g).collect(),
    )
    .context(path, "time_s")
}

pub fn write_accel(path: &Path, rec: &AccelRecord) -> CliResult<()> {
    let rows = (0..rec.len()).map(|i| AccelRow {
        time_s: rec.t[i],
        ax_g: rec.ax[i],
        ay_g: rec.ay[i],
        az_g: rec.az[i],
    });
    write_csv(path, &ACCEL_HEADER, rows)
}

/// Displacement series (mm) of one point along all three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDisplacement {
    pub point_id: u32,
    pub t: Vec<f64>,
    /// Indexed by [`Axis::index`].
    pub axes: [Vec<f64>; 3],
}

impl PointDisplacement {
    pub fn axis(&self, axis: Axis) -> &[f64] {
        &self.axes[axis.index()]
    }
}

/// Per-point displacement of a trajectory about the chosen zero reference.
pub fn trajectory_displacements(traj: &Trajectory3D, zero: ZeroReference) -> Vec<PointDisplacement> {
    traj.point_ids
        .iter()
        .enumerate()
        .map(|(p, &id)| PointDisplacement {
            point_id: id,
            t: traj.times.clone(),
            axes: Axis::ALL.map(|a| traj.displacement_mm(p, a, zero)),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct DisplacementRow {
    point_id: u32,
    time_s: f64,
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
}

pub fn read_displacements(path: &Path) -> CliResult<Vec<PointDisplacement>> {
    let rows: Vec<DisplacementRow> = records(path, &DISPLACEMENT_HEADER)?;
    let mut out: Vec<PointDisplacement> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|p| p.point_id == r.point_id) {
            Some(i) => i,
            None => {
                out.push(PointDisplacement {
                    point_id: r.point_id,
                    t: vec![],
                    axes: [vec![], vec![], vec![]],
                });
                out.len() - 1
            }
        };
        let p = &mut out[idx];
        if p.t.last().is_some_and(|&last| r.time_s <= last) {
            return Err(CliError::input(
                path,
                "time_s",
                format!("point {}: times must increase", r.point_id),
            ));
        }
        p.t.push(r.time_s);
        p.axes[0].push(r.x_mm);
        p.axes[1].push(r.y_mm);
        p.axes[2].push(r.z_mm);
    }
    if out.is_empty() {
        return Err(CliError::input(path, "point_id", "no displacement rows"));
    }
    Ok(out)
}

pub fn write_displacements(path: &Path, points: &[PointDisplacement]) -> CliResult<()> {
    let rows = points.iter().flat_map(|p| {
        (0..p.t.len()).map(move |i| DisplacementRow {
            point_id: p.point_id,
            time_s: p.t[i],
            x_mm: p.axes[0][i],
            y_mm: p.axes[1][i],
            z_mm: p.axes[2][i],
        })
    });
    write_csv(path, &DISPLACEMENT_HEADER, rows)
}
