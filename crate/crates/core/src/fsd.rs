//! Streaming frame-start detector.
//!
//! Matches `FF 00 00` prefixes byte by byte, pulls the V bit out of every
//! valid SAV code and reports its 1 -> 0 transitions. In interlaced video
//! that fires once per field, so events carry the F bit and
//! [`frame_starts`] keeps only the field-0 ones.

use crate::bt656::parse_xy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Phase {
    #[default]
    SeekFF,
    Seek00A,
    Seek00B,
    ReadXY,
}

/// Start of a field: the SAV whose V bit fell from 1 to 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldStartEvent {
    /// Stream offset of the SAV's XY byte.
    pub byte_offset: u64,
    /// F bit of the field that starts here.
    pub f_bit: bool,
}

impl FieldStartEvent {
    pub fn is_frame_start(&self) -> bool {
        !self.f_bit
    }
}

/// What the most recently fed byte was.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ByteClass {
    /// Part of a timing reference code (or a prefix candidate).
    Code,
    /// Outside active video.
    Blanking,
    /// Picture data; the payload is the byte's position after the SAV.
    Active(u32),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FsdState {
    pub phase: Phase,
    /// V bit of the last valid SAV, unset until the first one.
    pub last_v: Option<bool>,
    pub bytes_consumed: u64,
    /// Position of the next picture byte, while in active video.
    active_pos: Option<u32>,
    last: Option<ByteClass>,
}

impl FsdState {
    pub fn new() -> FsdState {
        FsdState::default()
    }

    /// Pristine state; discards any partial prefix match.
    pub fn reset(&mut self) {
        *self = FsdState::default();
    }

    /// Advances the detector by one byte.
    ///
    /// EAV codes only end active video. A corrupted XY byte is ignored and
    /// matching restarts (or resumes at once if that byte is itself `FF`).
    #[inline]
    pub fn feed_byte(&mut self, byte: u8) -> Option<FieldStartEvent> {
        let offset = self.bytes_consumed;
        self.bytes_consumed += 1;
        match self.phase {
            Phase::SeekFF => {
                if byte == 0xFF {
                    self.phase = Phase::Seek00A;
                    self.active_pos = None;
                    self.last = Some(ByteClass::Code);
                } else if let Some(pos) = self.active_pos.as_mut() {
                    self.last = Some(ByteClass::Active(*pos));
                    *pos += 1;
                } else {
                    self.last = Some(ByteClass::Blanking);
                }
                None
            }
            Phase::Seek00A | Phase::Seek00B => {
                let (phase, class) = match (byte, self.phase) {
                    (0x00, Phase::Seek00A) => (Phase::Seek00B, ByteClass::Code),
                    (0x00, _) => (Phase::ReadXY, ByteClass::Code),
                    (0xFF, _) => (Phase::Seek00A, ByteClass::Code),
                    _ => (Phase::SeekFF, ByteClass::Blanking),
                };
                self.phase = phase;
                self.last = Some(class);
                None
            }
            Phase::ReadXY => {
                self.phase = if byte == 0xFF { Phase::Seek00A } else { Phase::SeekFF };
                self.last = Some(ByteClass::Code);
                let code = parse_xy(byte).ok()?;
                if code.is_eav() {
                    return None;
                }
                let previous = self.last_v.replace(code.v);
                if !code.v {
                    self.active_pos = Some(0);
                }
                (previous == Some(true) && !code.v).then_some(FieldStartEvent {
                    byte_offset: offset,
                    f_bit: code.f,
                })
            }
        }
    }

    /// Classification of the byte most recently passed to `feed_byte`.
    #[inline]
    pub fn last_class(&self) -> ByteClass {
        self.last.unwrap_or(ByteClass::Blanking)
    }
}

/// Functional form of [`FsdState::feed_byte`].
pub fn feed_byte(state: &mut FsdState, byte: u8) -> Option<FieldStartEvent> {
    state.feed_byte(byte)
}

/// Field-0 starts only: one per frame.
pub fn frame_starts(events: &[FieldStartEvent]) -> Vec<FieldStartEvent> {
    events.iter().copied().filter(FieldStartEvent::is_frame_start).collect()
}

/// Runs a fresh detector over `bytes`.
pub fn detect_all(bytes: &[u8]) -> Vec<FieldStartEvent> {
    let mut state = FsdState::new();
    bytes.iter().filter_map(|&b| state.feed_byte(b)).collect()
}
