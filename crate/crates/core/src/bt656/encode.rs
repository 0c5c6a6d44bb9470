use super::code::TimingRefCode;
use super::frame::{blank_byte, RawFrame};
use super::geometry::FrameGeometry;
use super::GeometryError;

/// Reusable encoder: holds a fully blanked frame and patches active rows in.
#[derive(Clone, Debug)]
pub struct FrameEncoder {
    geometry: FrameGeometry,
    template: Vec<u8>,
}

impl FrameEncoder {
    pub fn new(geometry: FrameGeometry) -> Result<FrameEncoder, GeometryError> {
        geometry.validate()?;
        let bpl = geometry.bytes_per_line() as usize;
        let mut template = Vec::with_capacity(geometry.bytes_per_frame() as usize);
        for info in geometry.line_map() {
            template.extend_from_slice(&TimingRefCode::new(info.field, info.vblank, true).to_bytes());
            template.extend((0..geometry.hblank_bytes() as usize).map(blank_byte));
            template.extend_from_slice(&TimingRefCode::new(info.field, info.vblank, false).to_bytes());
            template.extend((0..geometry.active_bytes_per_line() as usize).map(blank_byte));
        }
        debug_assert_eq!(template.len(), bpl * geometry.lines_total as usize);
        Ok(FrameEncoder { geometry, template })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    /// Appends the encoded frame to `out`.
    pub fn encode_into(&self, frame: &RawFrame, out: &mut Vec<u8>) -> Result<(), GeometryError> {
        let g = &self.geometry;
        if !frame.matches(g) {
            return Err(GeometryError::FrameMismatch {
                expected: (g.samples_active, g.active_lines()),
                found: (frame.width(), frame.height()),
            });
        }
        let start = out.len();
        out.extend_from_slice(&self.template);
        let bpl = g.bytes_per_line() as usize;
        let active = g.active_start() as usize;
        for row in 0..frame.height() {
            let line = g.line_of_row(row) as usize;
            let at = start + (line - 1) * bpl + active;
            out[at..at + frame.row_bytes()].copy_from_slice(frame.row(row));
        }
        Ok(())
    }

    pub fn encode(&self, frame: &RawFrame) -> Result<Vec<u8>, GeometryError> {
        let mut out = Vec::with_capacity(self.template.len());
        self.encode_into(frame, &mut out)?;
        Ok(out)
    }
}

/// Serializes one frame: per line an EAV, horizontal blanking, an SAV, then
/// either picture data or vertical-blanking fill.
pub fn encode_frame(frame: &RawFrame, geometry: &FrameGeometry) -> Result<Vec<u8>, GeometryError> {
    FrameEncoder::new(*geometry)?.encode(frame)
}

/// Timing reference codes in one encoded frame (two per line).
pub fn codes_per_frame(geometry: &FrameGeometry) -> u64 {
    2 * geometry.lines_total as u64
}
