use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::bt656::{Component, RawFrame, MAX_DATA, MIN_DATA};

/// Built-in K-ary pixel operations. These stand in for a real fusion
/// algorithm; all of them work byte-wise on co-located 4:2:2 samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OperatorKind {
    /// Copies one channel.
    Passthrough(usize),
    /// Rounded mean of all channels.
    Average,
    /// Brightest luma of all channels; chroma from channel 0.
    LumaMax,
}

impl Default for OperatorKind {
    fn default() -> Self {
        OperatorKind::Passthrough(0)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Passthrough(0) => f.write_str("passthrough"),
            OperatorKind::Passthrough(c) => write!(f, "passthrough:{c}"),
            OperatorKind::Average => f.write_str("average"),
            OperatorKind::LumaMax => f.write_str("luma_max"),
        }
    }
}

impl FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "passthrough" => Ok(OperatorKind::Passthrough(0)),
            "average" => Ok(OperatorKind::Average),
            "luma_max" => Ok(OperatorKind::LumaMax),
            _ => s
                .strip_prefix("passthrough:")
                .and_then(|c| c.parse().ok())
                .map(OperatorKind::Passthrough)
                .ok_or_else(|| {
                    format!("unknown operator {s:?} (expected passthrough, passthrough:N, average or luma_max)")
                }),
        }
    }
}

impl TryFrom<String> for OperatorKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<OperatorKind> for String {
    fn from(k: OperatorKind) -> String {
        k.to_string()
    }
}

/// One Y/Cb/Cr sample tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    pub y: u8,
    pub cb: u8,
    pub cr: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelOperator {
    kind: OperatorKind,
    arity: usize,
}

impl PixelOperator {
    pub fn new(kind: OperatorKind, arity: usize) -> Result<PixelOperator, PipelineError> {
        if arity == 0 {
            return Err(PipelineError::Arity { expected: 1, got: 0 });
        }
        if let OperatorKind::Passthrough(c) = kind {
            if c >= arity {
                return Err(PipelineError::config(
                    "operator",
                    format!("passthrough channel {c} but only {arity} sources"),
                ));
            }
        }
        Ok(PixelOperator { kind, arity })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    /// Combines the co-located bytes of one component. `bytes.len()` must
    /// equal the arity; the caller guarantees it on the hot path.
    #[inline]
    pub fn apply_byte(&self, component: Component, bytes: &[u8]) -> u8 {
        debug_assert_eq!(bytes.len(), self.arity);
        let v = match self.kind {
            OperatorKind::Passthrough(c) => bytes[c],
            OperatorKind::Average => {
                let sum: u32 = bytes.iter().map(|&b| b as u32).sum();
                let k = bytes.len() as u32;
                ((sum + k / 2) / k) as u8
            }
            OperatorKind::LumaMax => {
                if component.is_luma() {
                    bytes.iter().copied().max().unwrap_or(MIN_DATA)
                } else {
                    bytes[0]
                }
            }
        };
        v.clamp(MIN_DATA, MAX_DATA)
    }

    /// Combines full sample tuples.
    pub fn apply(&self, samples: &[Sample]) -> Result<Sample, PipelineError> {
        if samples.len() != self.arity {
            return Err(PipelineError::Arity {
                expected: self.arity,
                got: samples.len(),
            });
        }
        let pick = |f: fn(&Sample) -> u8, c: Component| {
            let bytes: Vec<u8> = samples.iter().map(f).collect();
            self.apply_byte(c, &bytes)
        };
        Ok(Sample {
            y: pick(|s| s.y, Component::Y),
            cb: pick(|s| s.cb, Component::Cb),
            cr: pick(|s| s.cr, Component::Cr),
        })
    }

    /// Applies the operator to whole frames of identical size.
    pub fn apply_frames(&self, frames: &[&RawFrame]) -> Result<RawFrame, PipelineError> {
        if frames.len() != self.arity {
            return Err(PipelineError::Arity {
                expected: self.arity,
                got: frames.len(),
            });
        }
        let first = frames[0];
        if frames.iter().any(|f| (f.width(), f.height()) != (first.width(), first.height())) {
            return Err(PipelineError::config("frames", "input frames differ in size".to_string()));
        }
        let row = first.row_bytes();
        let mut bytes = vec![0u8; self.arity];
        let data = (0..first.data().len())
            .map(|i| {
                for (b, f) in bytes.iter_mut().zip(frames) {
                    *b = f.data()[i];
                }
                self.apply_byte(Component::at(i % row), &bytes)
            })
            .collect();
        Ok(RawFrame::new(first.width(), first.height(), data, first.field_parity().to_vec()))
    }
}

/// Free-function form of [`PixelOperator::apply`].
pub fn apply_pixel_operator(op: &PixelOperator, samples: &[Sample]) -> Result<Sample, PipelineError> {
    op.apply(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y(y: u8) -> Sample {
        Sample { y, cb: 128, cr: 128 }
    }

    #[test]
    fn examples() {
        let pass = PixelOperator::new(OperatorKind::Passthrough(0), 2).unwrap();
        assert_eq!(pass.apply(&[y(100), y(37)]).unwrap().y, 100);
        let avg = PixelOperator::new(OperatorKind::Average, 2).unwrap();
        assert_eq!(avg.apply(&[y(100), y(200)]).unwrap().y, 150);
        let lm = PixelOperator::new(OperatorKind::LumaMax, 2).unwrap();
        let out = lm
            .apply(&[
                Sample { y: 100, cb: 90, cr: 70 },
                Sample { y: 200, cb: 10, cr: 20 },
            ])
            .unwrap();
        assert_eq!((out.y, out.cb, out.cr), (200, 90, 70));
    }

    #[test]
    fn arity_is_checked() {
        let avg = PixelOperator::new(OperatorKind::Average, 3).unwrap();
        assert!(matches!(
            avg.apply(&[y(1), y(2)]),
            Err(PipelineError::Arity { expected: 3, got: 2 })
        ));
        assert!(PixelOperator::new(OperatorKind::Passthrough(2), 2).is_err());
    }

    #[test]
    fn output_stays_in_data_range() {
        let avg = PixelOperator::new(OperatorKind::Average, 2).unwrap();
        assert_eq!(avg.apply_byte(Component::Y, &[0xFF, 0xFF]), 0xFE);
        assert_eq!(avg.apply_byte(Component::Cb, &[0x00, 0x00]), 0x01);
    }

    #[test]
    fn names_round_trip() {
        for k in [
            OperatorKind::Passthrough(0),
            OperatorKind::Passthrough(3),
            OperatorKind::Average,
            OperatorKind::LumaMax,
        ] {
            assert_eq!(k.to_string().parse::<OperatorKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<OperatorKind>(&json).unwrap(), k);
        }
        assert!("blend".parse::<OperatorKind>().is_err());
    }
}
