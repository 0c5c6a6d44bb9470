use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Bytes taken by one EAV or SAV code.
pub const CODE_LEN: u32 = 4;

/// Line and sample counts of one digital video frame.
///
/// Line map: an interlaced frame splits into field 0 (the first
/// `lines_total / 2` lines) and field 1 (the rest). Each field ends with up to
/// three vertical-blanking lines and starts with the remaining ones, so the
/// 525-line default puts field 0's active lines at 20..=259 and field 1's at
/// 283..=522. A progressive frame is a single field whose blanking lines all
/// precede the active lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameGeometry {
    pub lines_total: u32,
    /// Luma samples per line, blanking included (two bytes per sample).
    pub samples_total: u32,
    pub samples_active: u32,
    pub lines_active_per_field: u32,
    pub interlaced: bool,
}

impl Default for FrameGeometry {
    fn default() -> Self {
        FrameGeometry::ntsc()
    }
}

/// Where a byte sits within a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Eav,
    Blanking,
    Sav,
    Active,
}

/// Frame coordinates of one stream byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Location {
    pub frame_index: u64,
    /// 1-based line number within the frame.
    pub line: u32,
    /// Byte position within the line; 0 is the first EAV byte.
    pub sample: u32,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineInfo {
    /// Field bit (F).
    pub field: bool,
    /// Vertical blanking bit (V).
    pub vblank: bool,
    /// Row in the active picture, for active lines.
    pub row: Option<u32>,
}

impl FrameGeometry {
    /// 525-line, 858-sample interlaced SD frame (900,900 bytes).
    pub const fn ntsc() -> FrameGeometry {
        FrameGeometry {
            lines_total: 525,
            samples_total: 858,
            samples_active: 720,
            lines_active_per_field: 240,
            interlaced: true,
        }
    }

    /// Scaled-down 96x64 active, 128x80 total frame for fast runs.
    pub const fn desk() -> FrameGeometry {
        FrameGeometry {
            lines_total: 80,
            samples_total: 128,
            samples_active: 96,
            lines_active_per_field: 32,
            interlaced: true,
        }
    }

    pub fn by_name(name: &str) -> Option<FrameGeometry> {
        match name {
            "ntsc" => Some(FrameGeometry::ntsc()),
            "desk" => Some(FrameGeometry::desk()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::Invalid(msg.to_string()));
        if self.samples_active == 0 || self.samples_active % 2 != 0 {
            return bad("samples_active must be even and positive");
        }
        if self.samples_active >= self.samples_total {
            return bad("samples_active must be below samples_total");
        }
        if self.hblank_bytes() < 1 {
            return bad("line too short for EAV, SAV and blanking");
        }
        if self.lines_active_per_field == 0 {
            return bad("lines_active_per_field must be positive");
        }
        for field in 0..self.fields() {
            if self.field_lines(field) <= self.lines_active_per_field {
                return bad("every field needs at least one vertical blanking line");
            }
        }
        if self.lines_total > 4096 || self.samples_total > 8192 {
            return bad("frame dimensions too large");
        }
        Ok(())
    }

    pub fn fields(&self) -> u32 {
        if self.interlaced {
            2
        } else {
            1
        }
    }

    fn field_lines(&self, field: u32) -> u32 {
        match (self.interlaced, field) {
            (false, _) => self.lines_total,
            (true, 0) => self.lines_total / 2,
            (true, _) => self.lines_total - self.lines_total / 2,
        }
    }

    /// (first line, leading blank lines) of a field; lines are 1-based.
    fn field_layout(&self, field: u32) -> (u32, u32) {
        let lines = self.field_lines(field);
        let spare = lines - self.lines_active_per_field;
        let trailing = if self.interlaced { spare.saturating_sub(1).min(3) } else { 0 };
        let first = if field == 0 { 1 } else { self.field_lines(0) + 1 };
        (first, spare - trailing)
    }

    pub fn bytes_per_line(&self) -> u32 {
        self.samples_total * 2
    }

    pub fn active_bytes_per_line(&self) -> u32 {
        self.samples_active * 2
    }

    pub fn hblank_bytes(&self) -> u32 {
        (self.bytes_per_line() - self.active_bytes_per_line()).saturating_sub(2 * CODE_LEN)
    }

    /// Offset of the first active byte within a line.
    pub fn active_start(&self) -> u32 {
        2 * CODE_LEN + self.hblank_bytes()
    }

    /// Offset of the SAV code within a line.
    pub fn sav_start(&self) -> u32 {
        CODE_LEN + self.hblank_bytes()
    }

    pub fn bytes_per_frame(&self) -> u64 {
        self.lines_total as u64 * self.bytes_per_line() as u64
    }

    /// Rows in the active picture.
    pub fn active_lines(&self) -> u32 {
        self.lines_active_per_field * self.fields()
    }

    /// Active payload of one frame; the synchronizer FIFO capacity.
    pub fn active_bytes_per_frame(&self) -> usize {
        self.active_lines() as usize * self.active_bytes_per_line() as usize
    }

    /// Field, blanking flag and picture row of a 1-based line number.
    pub fn line_info(&self, line: u32) -> LineInfo {
        assert!((1..=self.lines_total).contains(&line), "line {line} out of range");
        let field = if self.interlaced && line > self.field_lines(0) { 1 } else { 0 };
        let (first, leading) = self.field_layout(field);
        let first_active = first + leading;
        let active = line >= first_active && line < first_active + self.lines_active_per_field;
        let row = active.then(|| {
            let k = line - first_active;
            if self.interlaced {
                2 * k + field
            } else {
                k
            }
        });
        LineInfo {
            field: field == 1,
            vblank: !active,
            row,
        }
    }

    /// Line info for lines `1..=lines_total`, index 0 holding line 1.
    pub fn line_map(&self) -> Vec<LineInfo> {
        (1..=self.lines_total).map(|l| self.line_info(l)).collect()
    }

    /// 1-based line number carrying picture row `row`.
    pub fn line_of_row(&self, row: u32) -> u32 {
        assert!(row < self.active_lines());
        let (field, k) = if self.interlaced { (row % 2, row / 2) } else { (0, row) };
        let (first, leading) = self.field_layout(field);
        first + leading + k
    }

    /// First active line of field 0 (where a frame start is signalled).
    pub fn first_active_line(&self) -> u32 {
        self.line_of_row(0)
    }

    /// Stream offset, within a frame, of the `index`-th active byte.
    pub fn active_byte_offset(&self, index: usize) -> u64 {
        let per_line = self.active_bytes_per_line() as usize;
        let row = (index / per_line) as u32;
        let line = self.line_of_row(row);
        (line as u64 - 1) * self.bytes_per_line() as u64 + self.active_start() as u64 + (index % per_line) as u64
    }

    /// Offset within a frame of the XY byte of the SAV that opens field 0's
    /// active lines.
    pub fn frame_start_offset(&self) -> u64 {
        (self.first_active_line() as u64 - 1) * self.bytes_per_line() as u64 + self.sav_start() as u64 + 3
    }

    /// Maps a stream offset to frame coordinates.
    pub fn locate(&self, byte_offset: u64) -> Location {
        let frame_bytes = self.bytes_per_frame();
        let frame_index = byte_offset / frame_bytes;
        let within = byte_offset % frame_bytes;
        let bpl = self.bytes_per_line() as u64;
        let line = (within / bpl) as u32 + 1;
        let sample = (within % bpl) as u32;
        let region = if sample < CODE_LEN {
            Region::Eav
        } else if sample < self.sav_start() {
            Region::Blanking
        } else if sample < self.active_start() {
            Region::Sav
        } else if self.line_info(line).vblank {
            Region::Blanking
        } else {
            Region::Active
        };
        Location {
            frame_index,
            line,
            sample,
            region,
        }
    }
}

/// Free-function form of [`FrameGeometry::locate`].
pub fn locate(geometry: &FrameGeometry, byte_offset: u64) -> Location {
    geometry.locate(byte_offset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes() {
        let g = FrameGeometry::ntsc();
        g.validate().unwrap();
        assert_eq!(g.bytes_per_frame(), 900_900);
        assert_eq!(g.bytes_per_line(), 1716);
        assert_eq!(g.active_bytes_per_line(), 1440);
        assert_eq!(g.hblank_bytes(), 268);
        assert_eq!(g.active_bytes_per_frame(), 691_200);
        let d = FrameGeometry::desk();
        d.validate().unwrap();
        assert_eq!(d.bytes_per_frame(), 20_480);
        assert_eq!(d.active_bytes_per_frame(), 12_288);
    }

    #[test]
    fn default_line_map() {
        let g = FrameGeometry::ntsc();
        let active: Vec<u32> = (1..=525).filter(|&l| !g.line_info(l).vblank).collect();
        assert_eq!(active.len(), 480);
        assert_eq!(active[0], 20);
        assert_eq!(active[239], 259);
        assert_eq!(active[240], 283);
        assert_eq!(active[479], 522);
        assert!(!g.line_info(262).field);
        assert!(g.line_info(263).field);
        assert_eq!(g.line_info(20).row, Some(0));
        assert_eq!(g.line_info(283).row, Some(1));
        assert_eq!(g.line_info(522).row, Some(479));
        for row in 0..480 {
            assert_eq!(g.line_info(g.line_of_row(row)).row, Some(row));
        }
    }

    #[test]
    fn progressive_map_puts_blanking_first() {
        let g = FrameGeometry {
            lines_total: 20,
            samples_total: 16,
            samples_active: 8,
            lines_active_per_field: 15,
            interlaced: false,
        };
        g.validate().unwrap();
        assert_eq!(g.first_active_line(), 6);
        assert!(!g.line_info(20).vblank);
    }

    #[test]
    fn locate_examples() {
        let g = FrameGeometry::ntsc();
        let at = |o| g.locate(o);
        assert_eq!(
            at(0),
            Location {
                frame_index: 0,
                line: 1,
                sample: 0,
                region: Region::Eav
            }
        );
        assert_eq!(
            at(900_900),
            Location {
                frame_index: 1,
                line: 1,
                sample: 0,
                region: Region::Eav
            }
        );
        let first_active_20 = 19 * 1716 + 276;
        assert_eq!(at(first_active_20).region, Region::Active);
        assert_eq!(at(first_active_20).line, 20);
        assert_eq!(at(first_active_20 - 1).region, Region::Sav);
        assert_eq!(at(18 * 1716 + 276).region, Region::Blanking);
        assert_eq!(g.active_byte_offset(0), first_active_20);
        assert_eq!(g.frame_start_offset(), first_active_20 - 1);
    }

    #[test]
    fn invalid_geometries() {
        let mut g = FrameGeometry::desk();
        g.samples_active = 97;
        assert!(g.validate().is_err());
        let mut g = FrameGeometry::desk();
        g.lines_active_per_field = 40;
        assert!(g.validate().is_err());
        let mut g = FrameGeometry::desk();
        g.samples_active = 126;
        assert!(g.validate().is_err());
    }
}
