use super::code::{parse_xy, TimingRefCode};
use super::frame::{blank_byte, RawFrame};
use super::CodeError;

/// One labelled byte (or code) of a decoded stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeEvent {
    /// A valid timing reference code; `offset` is that of its first byte.
    Code { code: TimingRefCode, offset: u64 },
    /// Picture data following an SAV with V = 0.
    Active { line: u32, sample: u32, byte: u8 },
    /// Any other non-code byte.
    Blanking { line: u32, sample: u32, byte: u8 },
}

/// A malformed code found while decoding. The decoder skips it and resumes
/// at the next `FF 00 00` prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeWarning {
    /// Offset of the bad XY byte.
    pub offset: u64,
    pub error: CodeError,
}

/// How frame boundaries are recognised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScanMode {
    /// A new frame begins where F falls from 1 to 0.
    #[default]
    Interlaced,
    /// A new frame begins at the first EAV with V = 1 after active lines.
    Progressive,
}

/// A frame reassembled from the active lines between two boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedFrame {
    pub frame: RawFrame,
    /// Active lines seen in field 0 and field 1.
    pub field_lines: [u32; 2],
    /// Rows that were shorter than the widest one and were padded with
    /// blanking.
    pub short_rows: u32,
    /// The frame opened on a frame boundary (or at the start of a stream
    /// whose first code is in field 0).
    pub aligned_start: bool,
    /// The frame was closed by the next boundary rather than end of input.
    pub terminated: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodeOutput {
    pub events: Vec<DecodeEvent>,
    pub frames: Vec<DecodedFrame>,
    pub warnings: Vec<DecodeWarning>,
    pub codes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Data,
    Seen1,
    Seen2,
    Xy,
}

#[derive(Debug, Default)]
struct FrameAccumulator {
    fields: [Vec<Vec<u8>>; 2],
    aligned_start: bool,
}

/// Byte-at-a-time BT.656 decoder.
#[derive(Debug)]
pub struct StreamDecoder {
    mode: ScanMode,
    keep_events: bool,
    phase: Phase,
    offset: u64,
    prefix_at: u64,
    line: u32,
    line_start: u64,
    eav_to_sav: u64,
    saw_eav: bool,
    last_f: Option<bool>,
    last_sav_v: Option<bool>,
    active: bool,
    row_field: usize,
    row: Vec<u8>,
    frame: FrameAccumulator,
    out: DecodeOutput,
}

impl StreamDecoder {
    pub fn new(mode: ScanMode, keep_events: bool) -> StreamDecoder {
        StreamDecoder {
            mode,
            keep_events,
            phase: Phase::Data,
            offset: 0,
            prefix_at: 0,
            line: 0,
            line_start: 0,
            eav_to_sav: 0,
            saw_eav: false,
            last_f: None,
            last_sav_v: None,
            active: false,
            row_field: 0,
            row: Vec::new(),
            frame: FrameAccumulator::default(),
            out: DecodeOutput::default(),
        }
    }

    fn emit(&mut self, event: DecodeEvent) {
        if self.keep_events {
            self.out.events.push(event);
        }
    }

    fn sample(&self, offset: u64) -> u32 {
        offset.saturating_sub(self.line_start) as u32
    }

    fn data_byte(&mut self, offset: u64, byte: u8) {
        let (line, sample) = (self.line, self.sample(offset));
        if self.active {
            self.row.push(byte);
            self.emit(DecodeEvent::Active { line, sample, byte });
        } else {
            self.emit(DecodeEvent::Blanking { line, sample, byte });
        }
    }

    fn close_row(&mut self) {
        if self.active {
            let row = std::mem::take(&mut self.row);
            self.frame.fields[self.row_field].push(row);
            self.active = false;
        }
    }

    fn close_frame(&mut self, terminated: bool) {
        self.close_row();
        let acc = std::mem::take(&mut self.frame);
        if acc.fields.iter().all(|f| f.is_empty()) {
            return;
        }
        self.out.frames.push(assemble(acc, terminated));
    }

    fn on_code(&mut self, code: TimingRefCode, offset: u64) {
        self.out.codes += 1;
        let boundary = match self.mode {
            ScanMode::Interlaced => self.last_f == Some(true) && !code.f,
            ScanMode::Progressive => code.is_eav() && code.v && self.last_sav_v == Some(false),
        };
        if boundary {
            self.close_frame(true);
            self.frame.aligned_start = true;
            self.line = 1;
        } else if self.last_f.is_none() {
            self.frame.aligned_start = !code.f;
            self.line = 1;
        } else if code.is_eav() || !self.saw_eav {
            self.line += 1;
        }
        if code.is_eav() {
            self.line_start = offset;
            self.saw_eav = true;
        } else {
            if self.saw_eav {
                self.eav_to_sav = offset - self.line_start;
            } else {
                self.line_start = offset.saturating_sub(self.eav_to_sav);
            }
            self.saw_eav = false;
            self.last_sav_v = Some(code.v);
            if !code.v {
                self.active = true;
                self.row_field = code.f as usize;
            }
        }
        self.last_f = Some(code.f);
        self.emit(DecodeEvent::Code { code, offset });
    }

    /// Bytes of an abandoned prefix are relabelled as ordinary data.
    fn abandon_prefix(&mut self, upto: u64) {
        // Only FF/00 bytes can sit in a prefix; replay them as blanking.
        for (i, off) in (self.prefix_at..upto).enumerate() {
            let byte = if i == 0 { 0xFF } else { 0x00 };
            let (line, sample) = (self.line, self.sample(off));
            self.emit(DecodeEvent::Blanking { line, sample, byte });
        }
    }

    pub fn push(&mut self, byte: u8) {
        let offset = self.offset;
        self.offset += 1;
        match self.phase {
            Phase::Data => {
                if byte == 0xFF {
                    self.close_row();
                    self.prefix_at = offset;
                    self.phase = Phase::Seen1;
                } else {
                    self.data_byte(offset, byte);
                }
            }
            Phase::Seen1 | Phase::Seen2 => {
                if byte == 0x00 {
                    self.phase = if self.phase == Phase::Seen1 { Phase::Seen2 } else { Phase::Xy };
                } else if byte == 0xFF {
                    self.abandon_prefix(offset);
                    self.prefix_at = offset;
                    self.phase = Phase::Seen1;
                } else {
                    self.abandon_prefix(offset);
                    self.phase = Phase::Data;
                    self.data_byte(offset, byte);
                }
            }
            Phase::Xy => match parse_xy(byte) {
                Ok(code) => {
                    self.phase = Phase::Data;
                    self.on_code(code, self.prefix_at);
                }
                Err(error) => {
                    self.out.warnings.push(DecodeWarning { offset, error });
                    self.abandon_prefix(offset);
                    if byte == 0xFF {
                        self.prefix_at = offset;
                        self.phase = Phase::Seen1;
                    } else {
                        self.phase = Phase::Data;
                        self.data_byte(offset, byte);
                    }
                }
            },
        }
    }

    pub fn finish(mut self) -> DecodeOutput {
        if self.phase != Phase::Data {
            self.abandon_prefix(self.offset);
        }
        self.close_frame(false);
        self.out
    }
}

fn assemble(acc: FrameAccumulator, terminated: bool) -> DecodedFrame {
    let [f0, f1] = acc.fields;
    let field_lines = [f0.len() as u32, f1.len() as u32];
    // Rows hold whole Cb Y Cr Y groups.
    let widest = f0.iter().chain(f1.iter()).map(Vec::len).max().unwrap_or(0);
    let width_bytes = widest.div_ceil(4) * 4;
    let mut rows: Vec<(u8, Vec<u8>)> = Vec::with_capacity(f0.len() + f1.len());
    let (mut a, mut b) = (f0.into_iter(), f1.into_iter());
    loop {
        match (a.next(), b.next()) {
            (None, None) => break,
            (x, y) => {
                rows.extend(x.map(|r| (0, r)));
                rows.extend(y.map(|r| (1, r)));
            }
        }
    }
    let mut short_rows = 0;
    let mut data = Vec::with_capacity(rows.len() * width_bytes);
    let mut parity = Vec::with_capacity(rows.len());
    for (field, row) in rows {
        if row.len() < width_bytes {
            short_rows += 1;
        }
        let n = row.len();
        data.extend(row);
        data.extend((n..width_bytes).map(blank_byte));
        parity.push(field);
    }
    let height = parity.len() as u32;
    DecodedFrame {
        frame: RawFrame::new((width_bytes / 2) as u32, height, data, parity),
        field_lines,
        short_rows,
        aligned_start: acc.aligned_start,
        terminated,
    }
}

/// Decodes a complete interlaced stream, keeping every event.
pub fn decode_stream(bytes: &[u8]) -> DecodeOutput {
    decode_stream_with(bytes, ScanMode::Interlaced)
}

pub fn decode_stream_with(bytes: &[u8], mode: ScanMode) -> DecodeOutput {
    let mut decoder = StreamDecoder::new(mode, true);
    for &b in bytes {
        decoder.push(b);
    }
    decoder.finish()
}

/// Like [`decode_stream`] but without the per-byte event list.
pub fn decode_summary(bytes: &[u8], mode: ScanMode) -> DecodeOutput {
    let mut decoder = StreamDecoder::new(mode, false);
    for &b in bytes {
        decoder.push(b);
    }
    decoder.finish()
}
