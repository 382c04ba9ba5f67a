//! Core library for two-view structural displacement measurement.
//!
//! The crate is split by concern:
//!
//! * [`geometry`] - pinhole camera model, epipolar checks, triangulation,
//!   metric scale recovery and the camera-to-structure frame transform.
//! * [`sgr`] - structural geometry refinement of one view's horizontal track.
//! * [`signals`] - accelerometer-to-displacement reference chain and
//!   response-based synchronization.
//! * [`metrics`] - NRMSE (range normalized), Pearson correlation and
//!   relative peak-to-peak amplitude error.
//! * [`synth`] - seeded synthetic stereo-vibration scenes used as an oracle.
//!
//! Axis naming in the structure frame: X lateral, Y vertical (positive
//! downward by default), Z longitudinal.

pub mod error;
pub mod geometry;
pub mod metrics;
pub mod sgr;
pub mod signals;
pub mod synth;
pub mod track;

pub use error::{Error, Result};
