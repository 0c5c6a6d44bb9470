//! K-channel frame synchronizer.
//!
//! Every non-reference channel owns a one-frame circular FIFO. Its frame
//! starts rewind the write pointer and its active bytes are stored at its own
//! clock rate. Reference frame starts rewind every read pointer, and each
//! active reference byte pulls one byte from every FIFO. Because the pointer
//! position is the byte's position within the active frame, co-emitted bytes
//! always share (line, sample); only the frame they came from differs.

mod fifo;
mod reference;
mod trace;

use thiserror::Error;

use crate::clocks::{SimTime, TimedByte};
use crate::fsd::{ByteClass, FsdState};

pub use fifo::{CircularFifo, SlotTag};
pub use reference::{select_reference, ReferencePolicy};
pub use trace::{
    check_rows, read_trace_csv, temporal_offsets, write_rows, AlignmentTrace, OffsetStats, ParsedTrace, TraceCheck,
    TraceRow, TraceViolation, Violation, MAX_KEPT_VIOLATIONS,
};

/// Luma black; emitted by channels that have not buffered a whole frame.
pub const DEFAULT_FILL_BYTE: u8 = 0x10;

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("channel {channel} out of range for {k} channels")]
    ChannelOutOfRange { channel: usize, k: usize },
    #[error("channel {0} is the reference and has no FIFO")]
    ReferenceWrite(usize),
    #[error("need at least one channel")]
    NoChannels,
    #[error("no clock statistics to choose a reference from")]
    NoClockStats,
    #[error("fifo capacity must be positive")]
    ZeroCapacity,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trace at line {line}: {reason}")]
    MalformedTrace { line: u64, reason: String },
}

/// What one read tick produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadTick<'a> {
    /// One byte per channel, in channel order.
    pub bytes: &'a [u8],
    /// Position within the active frame, or `None` for blanking and codes.
    pub active_index: Option<u32>,
    /// Reference frame starts seen so far, minus one.
    pub session: u64,
    /// Every channel had a complete frame buffered when this session began.
    pub all_live: bool,
}

pub struct SyncModule {
    k: usize,
    reference: usize,
    fill_byte: u8,
    /// FIFO slot per channel; `None` for the reference.
    slot: Vec<Option<usize>>,
    fifos: Vec<CircularFifo>,
    detectors: Vec<FsdState>,
    first_frame_start: Vec<Option<SimTime>>,
    read_enabled: bool,
    session: u64,
    live: Vec<bool>,
    all_live: bool,
    /// Active reference bytes read in the current session.
    read_count: u32,
    out: Vec<u8>,
    tags: Vec<Option<SlotTag>>,
    trace: AlignmentTrace,
}

impl SyncModule {
    /// `capacity` is the active bytes per frame; `trace_every` samples trace
    /// rows (0 keeps none, violations and offsets are always tracked).
    pub fn new(
        k: usize,
        reference: usize,
        capacity: usize,
        fill_byte: u8,
        trace_every: u64,
    ) -> Result<SyncModule, SyncError> {
        if k == 0 {
            return Err(SyncError::NoChannels);
        }
        if reference >= k {
            return Err(SyncError::ChannelOutOfRange { channel: reference, k });
        }
        if capacity == 0 {
            return Err(SyncError::ZeroCapacity);
        }
        let slot: Vec<Option<usize>> = (0..k)
            .map(|c| match c.cmp(&reference) {
                std::cmp::Ordering::Less => Some(c),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(c - 1),
            })
            .collect();
        Ok(SyncModule {
            k,
            reference,
            fill_byte,
            slot,
            fifos: (1..k).map(|_| CircularFifo::new(capacity)).collect(),
            detectors: vec![FsdState::new(); k],
            first_frame_start: vec![None; k],
            read_enabled: false,
            session: 0,
            live: vec![false; k],
            all_live: false,
            read_count: 0,
            out: vec![0; k],
            tags: vec![None; k],
            trace: AlignmentTrace::new(k, reference, trace_every),
        })
    }

    pub fn channels(&self) -> usize {
        self.k
    }

    pub fn reference_channel(&self) -> usize {
        self.reference
    }

    pub fn fill_byte(&self) -> u8 {
        self.fill_byte
    }

    pub fn read_enabled(&self) -> bool {
        self.read_enabled
    }

    /// FIFO of a non-reference channel.
    pub fn fifo(&self, channel: usize) -> Option<&CircularFifo> {
        self.slot.get(channel).copied().flatten().map(|s| &self.fifos[s])
    }

    pub fn detector(&self, channel: usize) -> &FsdState {
        &self.detectors[channel]
    }

    /// Time of the first byte that completed a frame-start code on `channel`.
    pub fn first_frame_start(&self, channel: usize) -> Option<SimTime> {
        self.first_frame_start[channel]
    }

    /// Reference frames that have started.
    pub fn sessions(&self) -> u64 {
        if self.read_enabled {
            self.session + 1
        } else {
            0
        }
    }

    pub fn trace(&self) -> &AlignmentTrace {
        &self.trace
    }

    pub fn into_trace(self) -> AlignmentTrace {
        self.trace
    }

    /// Feeds one byte of a non-reference channel.
    #[inline]
    pub fn write_tick(&mut self, channel: usize, byte: &TimedByte) -> Result<(), SyncError> {
        let slot = match self.slot.get(channel) {
            None => return Err(SyncError::ChannelOutOfRange { channel, k: self.k }),
            Some(None) => return Err(SyncError::ReferenceWrite(channel)),
            Some(Some(s)) => *s,
        };
        let det = &mut self.detectors[channel];
        let fifo = &mut self.fifos[slot];
        if let Some(ev) = det.feed_byte(byte.value) {
            if ev.is_frame_start() {
                fifo.start_write_frame();
                self.first_frame_start[channel].get_or_insert(byte.time);
            }
        }
        if let ByteClass::Active(_) = det.last_class() {
            fifo.write(byte.value, SlotTag::from(&byte.provenance));
        }
        Ok(())
    }

    /// Feeds one reference byte. `None` until the first reference frame start.
    #[inline]
    pub fn read_tick(&mut self, ref_byte: &TimedByte) -> Option<ReadTick<'_>> {
        let det = &mut self.detectors[self.reference];
        if let Some(ev) = det.feed_byte(ref_byte.value) {
            if ev.is_frame_start() {
                self.first_frame_start[self.reference].get_or_insert(ref_byte.time);
                self.start_session();
            }
        }
        if !self.read_enabled {
            return None;
        }
        let class = self.detectors[self.reference].last_class();
        let ByteClass::Active(_) = class else {
            self.out.fill(ref_byte.value);
            return Some(ReadTick {
                bytes: &self.out,
                active_index: None,
                session: self.session,
                all_live: self.all_live,
            });
        };
        let ref_tag = SlotTag::from(&ref_byte.provenance);
        for c in 0..self.k {
            match self.slot[c] {
                None => {
                    self.out[c] = ref_byte.value;
                    self.tags[c] = Some(ref_tag);
                }
                Some(s) => {
                    let fifo = &mut self.fifos[s];
                    if self.live[c] {
                        let (v, tag) = fifo.read().expect("live fifo is read-enabled");
                        self.out[c] = v;
                        self.tags[c] = Some(tag);
                    } else {
                        fifo.skip();
                        self.out[c] = self.fill_byte;
                        self.tags[c] = None;
                    }
                }
            }
        }
        self.trace.record(ref_byte.time, ref_tag, &self.tags);
        let index = self.read_count;
        self.read_count += 1;
        Some(ReadTick {
            bytes: &self.out,
            active_index: Some(index),
            session: self.session,
            all_live: self.all_live,
        })
    }

    fn start_session(&mut self) {
        if self.read_enabled {
            self.session += 1;
        }
        self.read_enabled = true;
        self.read_count = 0;
        let mut all = true;
        for c in 0..self.k {
            self.live[c] = match self.slot[c] {
                None => true,
                Some(s) => {
                    self.fifos[s].start_read_frame();
                    self.fifos[s].is_primed()
                }
            };
            all &= self.live[c];
        }
        self.all_live = all;
    }
}
