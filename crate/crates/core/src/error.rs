use thiserror::Error;

use crate::sgr::Stagnation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input shapes or contracts do not match.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("point is at or behind the camera plane (camera-frame depth {depth:e})")]
    BehindCamera { depth: f64 },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("near-parallel rays (|cos| = {cos_angle:.15}, closest approach at s = {s:e}, t = {t:e})")]
    ParallelRays { cos_angle: f64, s: f64, t: f64 },

    #[error("triangulated point at infinity (|W| = {w:e})")]
    PointAtInfinity { w: f64 },

    #[error("undistortion did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no motion onset detected")]
    NoMotion,

    #[error("series are anti-correlated at the correlation peak (rho = {rho:.6}, lag = {lag_s} s)")]
    AntiCorrelated { rho: f64, lag_s: f64 },

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("refinement stagnated: {0}")]
    Stagnation(Box<Stagnation>),
}

impl Error {
    pub(crate) fn at_frame(self, frame: usize) -> Error {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }

    /// True for failures caused by numerics or degenerate geometry rather
    /// than malformed input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Contract(_) | Error::UnknownPreset { .. } => false,
            Error::Frame { source, .. } => source.is_numeric(),
            _ => true,
        }
    }
}
