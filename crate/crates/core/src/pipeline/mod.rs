//! End-to-end scenario engine: sources, synchronizer, pixel operator and
//! output formatting, driven as one deterministic discrete-event loop.
//!
//! Output blanking and timing codes are regenerated from the geometry; only
//! active bytes pass through the operator. Output frame `n` occupies the
//! reference stream's frame `n` time slot. Frames read before every channel
//! had buffered a whole frame are "priming" frames and are dropped unless
//! `include_priming` is set, so
//! `output_frames = frame_count - priming_frames`.

mod config;
mod content;
mod interface;
mod operator;
mod run;
mod verify;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bt656::GeometryError;
use crate::clocks::ClockError;
use crate::sync::SyncError;

pub use config::{
    derive_seed, ClockSpec, DriftKind, DriftSpec, FrequencySpec, GeometrySpec, OutputSpec, ResolvedSource, Scenario,
    ScenarioConfig, SourceConfig, SCHEMA_VERSION,
};
pub use content::{decode_frame_number, ContentGenerator, ContentSpec};
pub use interface::{encode_output, interface_decode, output_format, DecodedPicture, InterfaceOutput, OUTPUT_SOURCE_ID};
pub use operator::{apply_pixel_operator, OperatorKind, PixelOperator, Sample};
pub use run::{
    analyze_clocks, choose_reference, run_resolved, run_scenario, startup_deltas, write_artifacts, write_atomic,
    ClockAnalysis, ClockAnalysisRow, ScenarioRun, SimulationReport, SourceReport, StartupDelta,
};
pub use verify::{compare_dumps, DumpComparison};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("config: {0}")]
    Json(#[source] serde_json::Error),
    #[error("operator expects {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn config(field: &str, reason: String) -> PipelineError {
        PipelineError::Config {
            field: field.to_string(),
            reason,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> PipelineError {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Input/output failure rather than a bad scenario.
    pub fn is_io(&self) -> bool {
        matches!(self, PipelineError::Io { .. })
    }
}
