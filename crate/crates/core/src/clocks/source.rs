use serde::{Deserialize, Serialize};

use super::model::{ClockModel, EdgeCursor};
use super::time::SimTime;
use crate::bt656::{FrameEncoder, FrameGeometry, GeometryError, RawFrame, Region, CODE_LEN};

/// Where a stream byte came from. Carried alongside the byte so alignment
/// can be checked against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: u16,
    pub frame_index: u32,
    /// 1-based line.
    pub line: u16,
    /// Byte position within the line.
    pub sample: u16,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimedByte {
    pub time: SimTime,
    pub value: u8,
    pub provenance: Provenance,
}

/// Produces the picture for each frame of a synthetic source.
pub trait FrameContent: Send {
    fn frame(&mut self, geometry: &FrameGeometry, index: u64) -> RawFrame;
}

impl<F> FrameContent for F
where
    F: FnMut(&FrameGeometry, u64) -> RawFrame + Send,
{
    fn frame(&mut self, geometry: &FrameGeometry, index: u64) -> RawFrame {
        self(geometry, index)
    }
}

enum Feed {
    Synthetic {
        content: Box<dyn FrameContent>,
        encoder: FrameEncoder,
        frames_left: u64,
    },
    Recorded(Option<Vec<u8>>),
}

/// One source: a BT.656 byte stream clocked out one byte per edge.
pub struct SourceStream {
    source_id: u16,
    geometry: FrameGeometry,
    clock: EdgeCursor,
    feed: Feed,
    buffer: Vec<u8>,
    pos: usize,
    frame_index: u32,
    line: u16,
    sample: u16,
    line_active: bool,
    vblank: Vec<bool>,
    sav_start: u16,
    active_start: u16,
    bytes_per_line: u16,
}

impl SourceStream {
    /// Synthetic source emitting `frame_count` frames from `content`.
    pub fn synthetic(
        source_id: u16,
        clock: &ClockModel,
        geometry: FrameGeometry,
        content: Box<dyn FrameContent>,
        frame_count: u64,
    ) -> Result<SourceStream, GeometryError> {
        let encoder = FrameEncoder::new(geometry)?;
        Ok(SourceStream::with_feed(
            source_id,
            clock,
            geometry,
            Feed::Synthetic {
                content,
                encoder,
                frames_left: frame_count,
            },
        ))
    }

    /// Replays a recorded stream that starts on a frame boundary.
    pub fn recorded(
        source_id: u16,
        clock: &ClockModel,
        geometry: FrameGeometry,
        bytes: Vec<u8>,
    ) -> Result<SourceStream, GeometryError> {
        geometry.validate()?;
        Ok(SourceStream::with_feed(source_id, clock, geometry, Feed::Recorded(Some(bytes))))
    }

    fn with_feed(source_id: u16, clock: &ClockModel, geometry: FrameGeometry, feed: Feed) -> SourceStream {
        let vblank: Vec<bool> = geometry.line_map().iter().map(|l| l.vblank).collect();
        SourceStream {
            source_id,
            geometry,
            clock: EdgeCursor::new(clock),
            feed,
            buffer: Vec::new(),
            pos: 0,
            frame_index: 0,
            line: 1,
            sample: 0,
            line_active: !vblank[0],
            vblank,
            sav_start: geometry.sav_start() as u16,
            active_start: geometry.active_start() as u16,
            bytes_per_line: geometry.bytes_per_line() as u16,
        }
    }

    pub fn source_id(&self) -> u16 {
        self.source_id
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    /// Time of the next byte (whether or not one remains).
    pub fn peek_time(&self) -> SimTime {
        self.clock.peek()
    }

    fn refill(&mut self) -> bool {
        self.buffer.clear();
        self.pos = 0;
        match &mut self.feed {
            Feed::Synthetic {
                content,
                encoder,
                frames_left,
            } => {
                if *frames_left == 0 {
                    return false;
                }
                *frames_left -= 1;
                let frame = content.frame(&self.geometry, self.frame_index as u64);
                encoder
                    .encode_into(&frame, &mut self.buffer)
                    .expect("content generator produced a frame of the wrong size");
                true
            }
            Feed::Recorded(bytes) => match bytes.take() {
                Some(b) if !b.is_empty() => {
                    self.buffer = b;
                    true
                }
                _ => false,
            },
        }
    }

    #[inline]
    fn region(&self) -> Region {
        let s = self.sample;
        if s < CODE_LEN as u16 {
            Region::Eav
        } else if s < self.sav_start {
            Region::Blanking
        } else if s < self.active_start {
            Region::Sav
        } else if self.line_active {
            Region::Active
        } else {
            Region::Blanking
        }
    }

    #[inline]
    fn advance_position(&mut self) {
        self.sample += 1;
        if self.sample == self.bytes_per_line {
            self.sample = 0;
            self.line += 1;
            if self.line as u32 > self.geometry.lines_total {
                self.line = 1;
                self.frame_index += 1;
            }
            self.line_active = !self.vblank[self.line as usize - 1];
        }
    }
}

impl Iterator for SourceStream {
    type Item = TimedByte;

    #[inline]
    fn next(&mut self) -> Option<TimedByte> {
        if self.pos == self.buffer.len() && !self.refill() {
            return None;
        }
        let value = self.buffer[self.pos];
        self.pos += 1;
        let provenance = Provenance {
            source_id: self.source_id,
            frame_index: self.frame_index,
            line: self.line,
            sample: self.sample,
            region: self.region(),
        };
        self.advance_position();
        Some(TimedByte {
            time: self.clock.next_edge(),
            value,
            provenance,
        })
    }
}

/// Whole stream of a synthetic source, materialized.
pub fn generate_source(
    source_id: u16,
    clock: &ClockModel,
    geometry: FrameGeometry,
    content: Box<dyn FrameContent>,
    frame_count: u64,
) -> Result<Vec<TimedByte>, GeometryError> {
    Ok(SourceStream::synthetic(source_id, clock, geometry, content, frame_count)?.collect())
}
