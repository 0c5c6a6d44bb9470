//! 8-bit BT.656 stream codec.
//!
//! Every line is `EAV | horizontal blanking | SAV | active or blanking`, with
//! timing reference codes `FF 00 00 XY` carrying the F/V/H flags. Picture
//! data is 4:2:2 YCbCr in `Cb Y Cr Y` order.

mod code;
mod decode;
mod encode;
mod frame;
mod geometry;
pub mod image;

use thiserror::Error;

pub use code::{parse_xy, xy_byte, TimingRefCode, CODE_PREFIX};
pub use decode::{
    decode_stream, decode_stream_with, decode_summary, DecodeEvent, DecodeOutput, DecodeWarning, DecodedFrame,
    ScanMode, StreamDecoder,
};
pub use encode::{codes_per_frame, encode_frame, FrameEncoder};
pub use frame::{blank_byte, default_parity, Component, RawFrame, BLANK_CHROMA, BLANK_LUMA, MAX_DATA, MIN_DATA};
pub use geometry::{locate, FrameGeometry, LineInfo, Location, Region, CODE_LEN};

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("byte {0:#04x} is not a timing reference code (bit 7 clear)")]
    NotACode(u8),
    #[error("corrupted timing reference code: expected {expected:#04x}, found {found:#04x}")]
    Corrupted { expected: u8, found: u8 },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("invalid frame geometry: {0}")]
    Invalid(String),
    #[error("frame is {found:?} (width, height) but geometry expects {expected:?}")]
    FrameMismatch { expected: (u32, u32), found: (u32, u32) },
}
