use super::PipelineError;
use crate::bt656::{decode_stream_with, encode_frame, ScanMode, DecodeWarning, FrameEncoder, FrameGeometry, RawFrame};
use crate::clocks::{ClockModel, EdgeCursor, Provenance, TimedByte};

/// `source_id` stamped on output stream bytes.
pub const OUTPUT_SOURCE_ID: u16 = u16::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedPicture {
    pub frame: RawFrame,
    /// Every active line was seen, at full width.
    pub complete: bool,
}

impl DecodedPicture {
    /// Every pixel as `(x, y, (Y, Cb, Cr))`, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32, (u8, u8, u8))> + '_ {
        let f = &self.frame;
        (0..f.height()).flat_map(move |y| (0..f.width()).map(move |x| (x, y, f.pixel(x, y))))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterfaceOutput {
    pub pictures: Vec<DecodedPicture>,
    pub warnings: Vec<DecodeWarning>,
    pub codes: u64,
}

/// Decodes a BT.656 stream into pictures, judging completeness against
/// `geometry`.
pub fn interface_decode(bytes: &[u8], geometry: &FrameGeometry) -> InterfaceOutput {
    let mode = if geometry.interlaced {
        ScanMode::Interlaced
    } else {
        ScanMode::Progressive
    };
    let out = decode_stream_with(bytes, mode);
    let pictures = out
        .frames
        .into_iter()
        .map(|d| {
            let complete = d.aligned_start
                && d.short_rows == 0
                && d.field_lines.iter().sum::<u32>() == geometry.active_lines()
                && d.frame.matches(geometry);
            DecodedPicture {
                frame: d.frame,
                complete,
            }
        })
        .collect();
    InterfaceOutput {
        pictures,
        warnings: out.warnings,
        codes: out.codes,
    }
}

/// Formats a processed picture as one BT.656 frame.
pub fn output_format(frame: &RawFrame, geometry: &FrameGeometry) -> Result<Vec<u8>, PipelineError> {
    Ok(encode_frame(frame, geometry)?)
}

/// Output stream of `frames`, byte `j` of frame `i` sent on reference edge
/// `(first_frame + i) * bytes_per_frame + j`.
pub fn encode_output(
    frames: &[RawFrame],
    geometry: &FrameGeometry,
    reference: &ClockModel,
    first_frame: u64,
) -> Result<Vec<TimedByte>, PipelineError> {
    let encoder = FrameEncoder::new(*geometry)?;
    let b = geometry.bytes_per_frame();
    let mut edges = EdgeCursor::new(reference);
    edges.seek(first_frame * b);
    let mut out = Vec::with_capacity(frames.len() * b as usize);
    let mut buf = Vec::with_capacity(b as usize);
    for (i, frame) in frames.iter().enumerate() {
        buf.clear();
        encoder.encode_into(frame, &mut buf)?;
        for (j, &value) in buf.iter().enumerate() {
            let loc = geometry.locate(j as u64);
            out.push(TimedByte {
                time: edges.next_edge(),
                value,
                provenance: Provenance {
                    source_id: OUTPUT_SOURCE_ID,
                    frame_index: (first_frame + i as u64) as u32,
                    line: loc.line as u16,
                    sample: loc.sample as u16,
                    region: loc.region,
                },
            });
        }
    }
    Ok(out)
}
