//! Clock-accurate simulation of multiple independently clocked BT.656 video
//! sources and the frame-buffer synchronizer that aligns them.
//!
//! ```text
//!  sources (drifting clocks) --> fsd + circular FIFOs --> pixel operator --> output
//!        clocks, bt656              fsd, sync               pipeline        (reference clock)
//! ```
//!
//! Each source is a [`clocks::ClockModel`] emitting one stream byte per clock
//! edge. The [`sync::SyncModule`] writes every non-reference stream into a
//! one-frame circular FIFO at that stream's own rate, and reads all FIFOs on
//! the reference stream's clock, restarting both pointers at detected frame
//! starts. [`pipeline::run_scenario`] drives the whole thing as a
//! deterministic discrete-event simulation. [`power`] holds the LDO budget
//! arithmetic for the hardware the simulator stands in for.

pub mod bt656;
pub mod clocks;
pub mod fsd;
pub mod pipeline;
pub mod power;
pub mod sync;

pub use bt656::{FrameGeometry, RawFrame};
pub use clocks::{ClockModel, ClockStats, DriftProfile, Frequency, SimTime, TimedByte};
pub use pipeline::{run_scenario, ScenarioConfig, SimulationReport};
pub use sync::{ReferencePolicy, SyncModule};
