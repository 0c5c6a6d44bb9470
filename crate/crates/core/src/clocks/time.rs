use std::cmp::Ordering;
use std::fmt;

/// Femtoseconds per second. One femtosecond is the global base tick.
pub const FS_PER_SEC: u64 = 1_000_000_000_000_000;
/// Femtoseconds per nanosecond.
pub const FS_PER_NS: u64 = 1_000_000;

/// Exact simulation time.
///
/// A phase-accumulator value: an integer count of femtosecond base ticks plus
/// a rational residue `rem / den` of one tick, with `rem < den`. Every clock
/// advances its own accumulator with a fixed denominator, so adding periods
/// never rounds. Times from clocks with different denominators still compare
/// exactly (cross-multiplication in `u128`).
#[derive(Clone, Copy)]
pub struct SimTime {
    fs: u64,
    rem: u64,
    den: u64,
}

impl SimTime {
    pub const ZERO: SimTime = SimTime {
        fs: 0,
        rem: 0,
        den: 1,
    };

    /// Builds a time from whole ticks plus `rem / den` of a tick. The residue
    /// may exceed one tick; it is carried into the integer part.
    pub fn new(fs: u64, rem: u64, den: u64) -> SimTime {
        assert!(den > 0, "residue denominator must be positive");
        SimTime {
            fs: fs + rem / den,
            rem: rem % den,
            den,
        }
    }

    pub fn from_fs(fs: u64) -> SimTime {
        SimTime { fs, rem: 0, den: 1 }
    }

    pub fn from_ns(ns: u64) -> SimTime {
        SimTime::from_fs(ns * FS_PER_NS)
    }

    /// `num / den` seconds, exactly. Panics if the tick count overflows.
    pub fn from_secs_ratio(num: u64, den: u64) -> SimTime {
        assert!(den > 0);
        let total = num as u128 * FS_PER_SEC as u128;
        let fs = u64::try_from(total / den as u128).expect("time out of range");
        SimTime {
            fs,
            rem: (total % den as u128) as u64,
            den,
        }
    }

    /// Whole femtosecond ticks.
    pub fn ticks(&self) -> u64 {
        self.fs
    }

    /// Residue as `(numerator, denominator)` of one tick.
    pub fn residue(&self) -> (u64, u64) {
        (self.rem, self.den)
    }

    pub fn as_secs_f64(&self) -> f64 {
        (self.fs as f64 + self.rem as f64 / self.den as f64) / FS_PER_SEC as f64
    }

    pub fn as_ns_f64(&self) -> f64 {
        let whole_ns = self.fs / FS_PER_NS;
        let frac_fs = (self.fs % FS_PER_NS) as f64 + self.rem as f64 / self.den as f64;
        whole_ns as f64 + frac_fs / FS_PER_NS as f64
    }

    /// Signed difference `self - earlier` in nanoseconds. Exact up to the final
    /// conversion to `f64`.
    pub fn ns_since(&self, earlier: &SimTime) -> f64 {
        match self.cmp(earlier) {
            Ordering::Less => -earlier.ns_since(self),
            Ordering::Equal => 0.0,
            Ordering::Greater => {
                let (fs, num, den) = exact_difference(self, earlier);
                let whole_ns = fs / FS_PER_NS as u128;
                let frac_fs = (fs % FS_PER_NS as u128) as f64 + num as f64 / den as f64;
                whole_ns as f64 + frac_fs / FS_PER_NS as f64
            }
        }
    }

    /// Exact difference `self - earlier` for two times sharing a residue
    /// denominator, in units of `1/den` femtoseconds. `None` if the
    /// denominators differ or `earlier` is later.
    pub fn units_since(&self, earlier: &SimTime) -> Option<(u128, u64)> {
        if self.den != earlier.den || self < earlier {
            return None;
        }
        let a = self.fs as u128 * self.den as u128 + self.rem as u128;
        let b = earlier.fs as u128 * earlier.den as u128 + earlier.rem as u128;
        Some((a - b, self.den))
    }
}

/// `a - b` (with `a >= b`) as whole ticks plus `num/den` of a tick.
fn exact_difference(a: &SimTime, b: &SimTime) -> (u128, u128, u128) {
    if a.den == b.den {
        let (mut fs, rem) = (a.fs as u128 - b.fs as u128, a.rem as i128 - b.rem as i128);
        let den = a.den as i128;
        let rem = if rem < 0 {
            fs -= 1;
            rem + den
        } else {
            rem
        };
        return (fs, rem as u128, den as u128);
    }
    // Different denominators: the residue difference lies in (-1, 1) ticks and
    // is only needed to f64 precision.
    let ra = a.rem as f64 / a.den as f64;
    let rb = b.rem as f64 / b.den as f64;
    let mut fs = a.fs as u128 - b.fs as u128;
    let mut frac = ra - rb;
    if frac < 0.0 {
        fs -= 1;
        frac += 1.0;
    }
    let scale = 1u128 << 52;
    (fs, (frac * scale as f64) as u128, scale)
}

impl PartialEq for SimTime {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fs.cmp(&other.fs).then_with(|| {
            if self.den == other.den {
                self.rem.cmp(&other.rem)
            } else {
                (self.rem as u128 * other.den as u128).cmp(&(other.rem as u128 * self.den as u128))
            }
        })
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rem == 0 {
            write!(f, "SimTime({} fs)", self.fs)
        } else {
            write!(f, "SimTime({} + {}/{} fs)", self.fs, self.rem, self.den)
        }
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ns", self.as_ns_f64())
    }
}

/// A per-clock phase accumulator: a running time in units of `1/den`
/// femtoseconds, advanced by exact integer periods.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Accumulator {
    fs: u64,
    rem: u64,
    den: u64,
}

/// One clock period split into whole ticks and a residue over the
/// accumulator's denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Step {
    pub fs: u64,
    pub rem: u64,
}

impl Step {
    /// Splits a period of `units / den` femtoseconds.
    pub fn from_units(units: u128, den: u64) -> Step {
        Step {
            fs: u64::try_from(units / den as u128).expect("clock period out of range"),
            rem: (units % den as u128) as u64,
        }
    }
}

impl Accumulator {
    pub fn starting_at_ns(ns: u64, den: u64) -> Accumulator {
        Accumulator {
            fs: ns * FS_PER_NS,
            rem: 0,
            den,
        }
    }

    #[inline]
    pub fn now(&self) -> SimTime {
        SimTime {
            fs: self.fs,
            rem: self.rem,
            den: self.den,
        }
    }

    #[inline]
    pub fn advance(&mut self, step: Step) {
        self.fs += step.fs;
        self.rem += step.rem;
        if self.rem >= self.den {
            self.rem -= self.den;
            self.fs += 1;
        }
    }

    /// Advances by `count` steps in O(1).
    pub fn advance_by(&mut self, step: Step, count: u64) {
        let rem = self.rem as u128 + step.rem as u128 * count as u128;
        let carry = rem / self.den as u128;
        self.rem = (rem % self.den as u128) as u64;
        self.fs += step.fs * count + u64::try_from(carry).expect("time out of range");
    }
}
