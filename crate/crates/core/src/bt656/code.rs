use super::CodeError;

/// The three-byte preamble of every timing reference code.
pub const CODE_PREFIX: [u8; 3] = [0xFF, 0x00, 0x00];

/// Decoded XY byte of an EAV/SAV timing reference code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimingRefCode {
    /// Field bit.
    pub f: bool,
    /// Vertical blanking bit.
    pub v: bool,
    /// `false` for SAV, `true` for EAV.
    pub h: bool,
}

impl TimingRefCode {
    pub const fn new(f: bool, v: bool, h: bool) -> TimingRefCode {
        TimingRefCode { f, v, h }
    }

    pub fn is_sav(&self) -> bool {
        !self.h
    }

    pub fn is_eav(&self) -> bool {
        self.h
    }

    /// Protection nibble `P3 P2 P1 P0`.
    pub fn protection(&self) -> u8 {
        let (f, v, h) = (self.f as u8, self.v as u8, self.h as u8);
        ((v ^ h) << 3) | ((f ^ h) << 2) | ((f ^ v) << 1) | (f ^ v ^ h)
    }

    pub fn to_byte(&self) -> u8 {
        0x80 | (self.f as u8) << 6 | (self.v as u8) << 5 | (self.h as u8) << 4 | self.protection()
    }

    /// Full four-byte code `FF 00 00 XY`.
    pub fn to_bytes(&self) -> [u8; 4] {
        [0xFF, 0x00, 0x00, self.to_byte()]
    }
}

/// Packs `1 F V H P3 P2 P1 P0`.
pub fn xy_byte(f: bool, v: bool, h: bool) -> u8 {
    TimingRefCode::new(f, v, h).to_byte()
}

/// Validates and unpacks an XY byte.
pub fn parse_xy(byte: u8) -> Result<TimingRefCode, CodeError> {
    if byte & 0x80 == 0 {
        return Err(CodeError::NotACode(byte));
    }
    let code = TimingRefCode::new(byte & 0x40 != 0, byte & 0x20 != 0, byte & 0x10 != 0);
    let expected = code.to_byte();
    if expected != byte {
        return Err(CodeError::Corrupted { expected, found: byte });
    }
    Ok(code)
}
