//! Source clocks: exact time, drifting oscillators, clock measurement and
//! clocked source streams.

mod measure;
mod model;
mod source;
mod time;

use thiserror::Error;

pub use measure::{measure_clock, ClockMeter, ClockStats, DEFAULT_WINDOW};
pub use model::{
    instantaneous_frequency, next_edge, ClockModel, DriftProfile, EdgeCursor, Frequency, DEFAULT_STEP_EDGES,
};
pub use source::{generate_source, FrameContent, Provenance, SourceStream, TimedByte};
pub use time::{SimTime, FS_PER_NS, FS_PER_SEC};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("need at least {needed} edges for one measurement window, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("measurement window must span at least 2 edges, got {0}")]
    WindowTooSmall(usize),
    #[error("invalid clock model: {0}")]
    InvalidModel(String),
}
