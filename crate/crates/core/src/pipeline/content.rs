use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bt656::{Component, FrameGeometry, RawFrame};
use crate::clocks::FrameContent;

const NUMBER_BITS: u32 = 16;
const NUMBER_ROWS: u32 = 8;

fn luma_black() -> u8 {
    16
}

fn chroma_zero() -> u8 {
    128
}

/// Synthetic picture content for a source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContentSpec {
    Constant {
        #[serde(default = "luma_black")]
        y: u8,
        #[serde(default = "chroma_zero")]
        cb: u8,
        #[serde(default = "chroma_zero")]
        cr: u8,
    },
    /// Diagonal ramps that scroll by one step per frame.
    Gradient {},
    /// Uniform random bytes; the seed is derived from the scenario seed
    /// unless given.
    Noise {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Static ramp with the frame index as a row of black/white blocks.
    NumberedFrame {},
}

impl Default for ContentSpec {
    fn default() -> Self {
        ContentSpec::NumberedFrame {}
    }
}

/// Frame source built from a [`ContentSpec`].
#[derive(Clone, Debug)]
pub struct ContentGenerator {
    spec: ContentSpec,
    seed: u64,
}

impl ContentGenerator {
    /// `seed` is used by noise content without an explicit seed.
    pub fn new(spec: ContentSpec, seed: u64) -> ContentGenerator {
        let seed = match spec {
            ContentSpec::Noise { seed: Some(s) } => s,
            _ => seed,
        };
        ContentGenerator { spec, seed }
    }

    pub fn render(&self, geometry: &FrameGeometry, index: u64) -> RawFrame {
        match self.spec {
            ContentSpec::Constant { y, cb, cr } => RawFrame::from_fn(geometry, |_, c| match Component::at(c as usize) {
                Component::Y => y,
                Component::Cb => cb,
                Component::Cr => cr,
            }),
            ContentSpec::Gradient {} => {
                let i = index as u32;
                RawFrame::from_fn(geometry, |r, c| {
                    let x = c / 2;
                    match Component::at(c as usize) {
                        Component::Y => (16 + (x * 3 + r * 2 + i) % 220) as u8,
                        Component::Cb => (96 + (r * 2 + i) % 64) as u8,
                        Component::Cr => (96 + (x + i) % 64) as u8,
                    }
                })
            }
            ContentSpec::Noise { .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(index);
                RawFrame::from_fn(geometry, |_, _| rng.gen_range(1..=254))
            }
            ContentSpec::NumberedFrame {} => {
                let block = (geometry.samples_active / NUMBER_BITS).max(1);
                let n = index as u32;
                RawFrame::from_fn(geometry, |r, c| {
                    let x = c / 2;
                    let luma = Component::at(c as usize).is_luma();
                    if r < NUMBER_ROWS && x < block * NUMBER_BITS {
                        let bit = NUMBER_BITS - 1 - x / block;
                        match (luma, n >> bit & 1) {
                            (true, 1) => 235,
                            (true, _) => 16,
                            (false, _) => 128,
                        }
                    } else if luma {
                        (32 + (x + r) % 192) as u8
                    } else {
                        128
                    }
                })
            }
        }
    }
}

impl FrameContent for ContentGenerator {
    fn frame(&mut self, geometry: &FrameGeometry, index: u64) -> RawFrame {
        self.render(geometry, index)
    }
}

/// Reads back the block-coded index of a numbered frame (low 16 bits).
pub fn decode_frame_number(frame: &RawFrame) -> Option<u16> {
    let block = (frame.width() / NUMBER_BITS).max(1);
    if frame.width() < block * NUMBER_BITS || frame.height() == 0 {
        return None;
    }
    let row = NUMBER_ROWS.min(frame.height()) / 2;
    let mut n = 0u16;
    for bit in 0..NUMBER_BITS {
        let x = bit * block + block / 2;
        let (y, _, _) = frame.pixel(x, row);
        n = n << 1 | u16::from(y > 128);
    }
    Some(n)
}
