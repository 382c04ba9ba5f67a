//! Command-line pipeline around `girder-core`: simulate, triangulate,
//! refine, derive the accelerometer reference, synchronize and evaluate.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod report;
pub mod rigdoc;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use error::{CliError, CliResult, EXIT_INPUT, EXIT_NUMERIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Simulate,
    Triangulate,
    Refine,
    Reference,
    Sync,
    Evaluate,
}

#[derive(Debug, Parser)]
#[command(name = "girder-kit", version, about = "Stereo structural displacement measurement and evaluation")]
pub struct Cli {
    /// Pipeline stage to run.
    #[arg(value_enum)]
    pub stage: Stage,
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write SVG figures next to the evaluation report.
    #[arg(long)]
    pub plots: bool,
}

/// Runs one stage and returns a one-line summary.
pub fn run(cli: &Cli) -> CliResult<String> {
    let loaded = config::Loaded::load(&cli.config, cli.out.as_deref())?;
    let run = commands::Run::new(loaded, cli.seed, cli.plots);
    match cli.stage {
        Stage::Simulate => commands::simulate(&run),
        Stage::Triangulate => commands::triangulate(&run),
        Stage::Refine => commands::refine(&run),
        Stage::Reference => commands::reference(&run),
        Stage::Sync => commands::sync(&run),
        Stage::Evaluate => {
            let report = commands::evaluate(&run)?;
            Ok(format!(
                "evaluated {} entr{} and {} amplitude check(s) -> {}",
                report.entries.len(),
                if report.entries.len() == 1 { "y" } else { "ies" },
                report.amplitude_checks.len(),
                run.loaded.out("report.json").display()
            ))
        }
    }
}
