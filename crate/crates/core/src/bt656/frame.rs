use super::geometry::FrameGeometry;

/// Smallest legal data byte; 0x00 is reserved for code prefixes.
pub const MIN_DATA: u8 = 0x01;
/// Largest legal data byte; 0xFF is reserved for code prefixes.
pub const MAX_DATA: u8 = 0xFE;

/// Chroma blanking level.
pub const BLANK_CHROMA: u8 = 0x80;
/// Luma blanking level.
pub const BLANK_LUMA: u8 = 0x10;

/// Colour component carried by an active byte.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Cb,
    Y,
    Cr,
}

impl Component {
    /// Component at byte position `pos` of an active line (`Cb Y Cr Y`).
    #[inline]
    pub fn at(pos: usize) -> Component {
        match pos % 4 {
            0 => Component::Cb,
            2 => Component::Cr,
            _ => Component::Y,
        }
    }

    pub fn is_luma(self) -> bool {
        self == Component::Y
    }
}

/// One active picture in 4:2:2 YCbCr, bytes ordered `Cb Y Cr Y` per pixel
/// pair.
///
/// Constructors clamp every byte into `[0x01, 0xFE]`; this is the only place
/// pixel data is sanitized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFrame {
    width: u32,
    height: u32,
    data: Vec<u8>,
    field_parity: Vec<u8>,
}

impl RawFrame {
    /// Builds a frame from `height` rows of `2 * width` bytes each.
    pub fn new(width: u32, height: u32, mut data: Vec<u8>, field_parity: Vec<u8>) -> RawFrame {
        assert!(width % 2 == 0, "4:2:2 rows need an even pixel count");
        assert_eq!(data.len(), width as usize * 2 * height as usize, "pixel buffer size");
        assert_eq!(field_parity.len(), height as usize, "one parity entry per row");
        for b in &mut data {
            *b = (*b).clamp(MIN_DATA, MAX_DATA);
        }
        RawFrame {
            width,
            height,
            data,
            field_parity,
        }
    }

    /// Frame sized for `geometry`, with field parity from its line map.
    pub fn for_geometry(geometry: &FrameGeometry, data: Vec<u8>) -> RawFrame {
        let height = geometry.active_lines();
        RawFrame::new(geometry.samples_active, height, data, default_parity(geometry))
    }

    /// Builds a frame by evaluating `f(row, byte_in_row)` for every byte.
    pub fn from_fn(geometry: &FrameGeometry, mut f: impl FnMut(u32, u32) -> u8) -> RawFrame {
        let row_bytes = geometry.active_bytes_per_line();
        let data = (0..geometry.active_lines())
            .flat_map(|r| (0..row_bytes).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        RawFrame::for_geometry(geometry, data)
    }

    /// Black frame.
    pub fn blank(geometry: &FrameGeometry) -> RawFrame {
        RawFrame::from_fn(geometry, |_, c| blank_byte(c as usize))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn field_parity(&self) -> &[u8] {
        &self.field_parity
    }

    pub fn row_bytes(&self) -> usize {
        self.width as usize * 2
    }

    pub fn row(&self, row: u32) -> &[u8] {
        let n = self.row_bytes();
        &self.data[row as usize * n..(row as usize + 1) * n]
    }

    /// `(Y, Cb, Cr)` of pixel `(x, y)`; chroma is shared by each pixel pair.
    pub fn pixel(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let row = self.row(y);
        let pair = (x / 2) as usize * 4;
        let luma = row[pair + 1 + 2 * (x % 2) as usize];
        (luma, row[pair], row[pair + 2])
    }

    /// Overwrites one byte, clamping it like the constructors do.
    pub fn set_byte(&mut self, row: u32, byte_in_row: usize, value: u8) {
        let n = self.row_bytes();
        self.data[row as usize * n + byte_in_row] = value.clamp(MIN_DATA, MAX_DATA);
    }

    /// True when the frame's dimensions and parity fit `geometry`.
    pub fn matches(&self, geometry: &FrameGeometry) -> bool {
        self.width == geometry.samples_active
            && self.height == geometry.active_lines()
            && self.field_parity == default_parity(geometry)
    }
}

/// Field parity of each picture row under `geometry`'s line map.
pub fn default_parity(geometry: &FrameGeometry) -> Vec<u8> {
    (0..geometry.active_lines())
        .map(|row| geometry.line_info(geometry.line_of_row(row)).field as u8)
        .collect()
}

/// Blanking fill byte at position `pos` of a run (`80 10 80 10 ...`).
#[inline]
pub fn blank_byte(pos: usize) -> u8 {
    if pos % 2 == 0 {
        BLANK_CHROMA
    } else {
        BLANK_LUMA
    }
}
