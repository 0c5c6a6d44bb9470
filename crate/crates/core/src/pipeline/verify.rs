use serde::{Deserialize, Serialize};

use crate::fsd::{ByteClass, FsdState};

/// Structural comparison of two streams that should be position-aligned.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpComparison {
    pub len_a: u64,
    pub len_b: u64,
    /// Offsets (within the common length) whose role differs: code versus
    /// blanking versus active, or a different position within the line.
    pub violations: u64,
    pub first_violation: Option<u64>,
    /// Offsets whose byte values differ, structure aside.
    pub differing_bytes: u64,
}

impl DumpComparison {
    pub fn aligned(&self) -> bool {
        self.violations == 0 && self.len_a == self.len_b
    }
}

pub fn compare_dumps(a: &[u8], b: &[u8]) -> DumpComparison {
    let mut fa = FsdState::new();
    let mut fb = FsdState::new();
    let mut out = DumpComparison {
        len_a: a.len() as u64,
        len_b: b.len() as u64,
        ..DumpComparison::default()
    };
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        fa.feed_byte(x);
        fb.feed_byte(y);
        if x != y {
            out.differing_bytes += 1;
        }
        let same = match (fa.last_class(), fb.last_class()) {
            (ByteClass::Active(p), ByteClass::Active(q)) => p == q,
            (p, q) => p == q,
        };
        if !same {
            out.violations += 1;
            out.first_violation.get_or_insert(i as u64);
        }
    }
    out
}
