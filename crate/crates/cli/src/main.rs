//! `mvsync`: run synchronizer scenarios, analyze clocks, inspect and verify
//! streams, and size power budgets.
//!
//! Exit codes: 0 success, 1 violations found, 2 usage or config error,
//! 3 I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mvsync_core::pipeline::PipelineError;
use mvsync_core::power::PowerError;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "mvsync", version, about = "Multi-source BT.656 synchronizer simulator")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario (or power budget) JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the scenario geometry; also the geometry `inspect` expects.
    #[arg(long, global = true, value_enum)]
    geometry: Option<GeometryArg>,
    /// Machine-readable output instead of text.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its report, trace and dumps.
    Simulate,
    /// Per-source clock statistics and startup deltas.
    AnalyzeClocks,
    /// Decode a `.656` dump and summarize it.
    Inspect {
        dump: PathBuf,
        /// Write one decoded frame as PPM (or PGM, by extension).
        #[arg(long)]
        image: Option<PathBuf>,
        /// Frame to export with --image.
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// Check a trace CSV, or compare the structure of two dumps.
    Verify {
        #[arg(long, conflicts_with = "dump")]
        trace: Option<PathBuf>,
        /// Give twice.
        #[arg(long)]
        dump: Vec<PathBuf>,
    },
    /// Power totals and LDO sizing; the reference build unless --config.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GeometryArg {
    Ntsc,
    Desk,
}

impl GeometryArg {
    fn name(self) -> &'static str {
        match self {
            GeometryArg::Ntsc => "ntsc",
            GeometryArg::Desk => "desk",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Power(#[from] PowerError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 3,
            CliError::Pipeline(e) if e.is_io() => 3,
            _ => 2,
        }
    }
}

/// What a command found: `Violations` maps to exit code 1.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Violations,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mvsync: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
