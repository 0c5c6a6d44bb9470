use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::time::{Accumulator, SimTime, Step, FS_PER_SEC};
use super::ClockError;

const PPB_PER_UNIT: i64 = 1_000_000_000;

/// Default number of edges between drift-profile updates (1 ms at 27 MHz).
pub const DEFAULT_STEP_EDGES: u64 = 27_000;

/// An exact rational frequency in Hz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frequency {
    pub num: u64,
    pub den: u64,
}

impl Frequency {
    pub const fn hz(hz: u64) -> Frequency {
        Frequency { num: hz, den: 1 }
    }

    pub fn ratio(num: u64, den: u64) -> Frequency {
        let g = gcd(num as u128, den as u128) as u64;
        Frequency {
            num: num / g,
            den: den / g,
        }
    }

    /// Parses a decimal literal such as `27000000` or `14318180.5`.
    pub fn parse_decimal(text: &str) -> Option<Frequency> {
        let text = text.trim();
        let (int, frac) = match text.split_once('.') {
            Some((i, f)) => (i, f.trim_end_matches('0')),
            None => (text, ""),
        };
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let den = 10u64.checked_pow(frac.len() as u32)?;
        let num: u64 = format!("{int}{frac}").parse().ok()?;
        if num == 0 {
            return None;
        }
        Some(Frequency::ratio(num, den))
    }

    pub fn as_f64(&self) -> f64 {
        ratio_to_f64(self.num as u128, self.den as u128)
    }
}

/// How a clock's rate departs from nominal over time.
#[derive(Clone, Debug, PartialEq)]
pub enum DriftProfile {
    None,
    ConstantPpm(f64),
    SinusoidalPpm {
        amplitude_ppm: f64,
        period_s: f64,
        /// Radians.
        phase: f64,
    },
    /// Bounded random walk: once per profile step the offset moves by a
    /// uniform draw in `[-step_ppm, step_ppm]`, then is clamped to
    /// `±bound_ppm`.
    RandomWalkPpm { step_ppm: f64, bound_ppm: f64, seed: u64 },
}

impl DriftProfile {
    /// Largest drift magnitude the profile can produce, in ppm.
    pub fn bound_ppm(&self) -> f64 {
        match *self {
            DriftProfile::None => 0.0,
            DriftProfile::ConstantPpm(p) => p.abs(),
            DriftProfile::SinusoidalPpm { amplitude_ppm, .. } => amplitude_ppm.abs(),
            DriftProfile::RandomWalkPpm { bound_ppm, .. } => bound_ppm.abs(),
        }
    }

    fn is_variable(&self) -> bool {
        matches!(self, DriftProfile::SinusoidalPpm { .. } | DriftProfile::RandomWalkPpm { .. })
    }
}

fn ppm_to_ppb(ppm: f64) -> i64 {
    (ppm * 1000.0).round() as i64
}

/// A drifting oscillator.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockModel {
    pub nominal: Frequency,
    pub drift: DriftProfile,
    pub startup_delay_ns: u64,
    /// Edges per drift-profile step. Within a step the period is constant.
    pub step_edges: u64,
}

impl ClockModel {
    pub fn new(nominal: Frequency, drift: DriftProfile, startup_delay_ns: u64) -> ClockModel {
        ClockModel {
            nominal,
            drift,
            startup_delay_ns,
            step_edges: DEFAULT_STEP_EDGES,
        }
    }

    /// A 27 MHz clock with no drift and no startup delay.
    pub fn ideal_27mhz() -> ClockModel {
        ClockModel::new(Frequency::hz(27_000_000), DriftProfile::None, 0)
    }

    pub fn with_step_edges(mut self, step_edges: u64) -> ClockModel {
        self.step_edges = step_edges;
        self
    }

    pub fn startup_delay(&self) -> SimTime {
        SimTime::from_ns(self.startup_delay_ns)
    }

    pub fn nominal_period_s(&self) -> f64 {
        1.0 / self.nominal.as_f64()
    }

    pub fn validate(&self) -> Result<(), ClockError> {
        if self.nominal.num == 0 || self.nominal.den == 0 {
            return Err(ClockError::InvalidModel("nominal_hz must be positive".into()));
        }
        if self.nominal.den > 100_000 {
            return Err(ClockError::InvalidModel("nominal_hz denominator too large".into()));
        }
        if self.step_edges == 0 {
            return Err(ClockError::InvalidModel("step_edges must be at least 1".into()));
        }
        let bound = self.drift.bound_ppm();
        if !bound.is_finite() || bound >= 1e5 {
            return Err(ClockError::InvalidModel("drift magnitude must be below 100000 ppm".into()));
        }
        if let DriftProfile::SinusoidalPpm { period_s, phase, .. } = self.drift {
            if !(period_s.is_finite() && period_s > 0.0) || !phase.is_finite() {
                return Err(ClockError::InvalidModel("sinusoidal drift needs a positive period".into()));
            }
        }
        if let DriftProfile::RandomWalkPpm { step_ppm, .. } = self.drift {
            if !(step_ppm.is_finite() && step_ppm >= 0.0) {
                return Err(ClockError::InvalidModel("random walk step must be non-negative".into()));
            }
        }
        let scale = match self.drift {
            DriftProfile::None => 1u128,
            _ => 2 * PPB_PER_UNIT as u128,
        };
        if self.nominal.num as u128 * scale > u64::MAX as u128 {
            return Err(ClockError::InvalidModel("nominal_hz too large".into()));
        }
        Ok(())
    }

    /// Denominator of this clock's phase accumulator.
    fn accumulator_den(&self) -> u64 {
        let scale = match self.drift {
            DriftProfile::None => 1,
            DriftProfile::ConstantPpm(ppm) => (PPB_PER_UNIT + ppm_to_ppb(ppm)) as u64,
            _ => PPB_PER_UNIT as u64,
        };
        self.nominal.num * scale
    }

    /// Period for a segment running at `ppb` offset, in accumulator units.
    fn period_units(&self, ppb: i64) -> u128 {
        let base = FS_PER_SEC as u128 * self.nominal.den as u128;
        match self.drift {
            DriftProfile::None => base,
            DriftProfile::ConstantPpm(_) => base * PPB_PER_UNIT as u128,
            _ => {
                let num = base * (PPB_PER_UNIT as u128) * (PPB_PER_UNIT as u128);
                let den = (PPB_PER_UNIT + ppb) as u128;
                (num + den / 2) / den
            }
        }
    }

    /// Drift of a sinusoidal profile at `t`, in ppb.
    fn sinusoid_ppb(&self, t_s: f64) -> i64 {
        match self.drift {
            DriftProfile::SinusoidalPpm {
                amplitude_ppm,
                period_s,
                phase,
            } => {
                let bound = ppm_to_ppb(amplitude_ppm.abs());
                let v = ppm_to_ppb(amplitude_ppm * (TAU * t_s / period_s + phase).sin());
                v.clamp(-bound, bound)
            }
            _ => 0,
        }
    }
}

/// Streams the edge times of one clock, in order.
///
/// Edge `n` is emitted at the accumulator value after `n` periods; each
/// profile step fixes its period from the drift evaluated at the step's first
/// edge.
#[derive(Clone, Debug)]
pub struct EdgeCursor {
    model: ClockModel,
    acc: Accumulator,
    next_index: u64,
    segment_left: u64,
    step: Step,
    ppb: i64,
    walk: Option<ChaCha8Rng>,
}

impl EdgeCursor {
    pub fn new(model: &ClockModel) -> EdgeCursor {
        let den = model.accumulator_den();
        let walk = match model.drift {
            DriftProfile::RandomWalkPpm { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let mut cursor = EdgeCursor {
            model: model.clone(),
            acc: Accumulator::starting_at_ns(model.startup_delay_ns, den),
            next_index: 0,
            segment_left: 0,
            step: Step { fs: 0, rem: 0 },
            ppb: 0,
            walk,
        };
        cursor.begin_segment(true);
        cursor
    }

    fn begin_segment(&mut self, first: bool) {
        let model = &self.model;
        self.ppb = match model.drift {
            DriftProfile::None => 0,
            DriftProfile::ConstantPpm(ppm) => ppm_to_ppb(ppm),
            DriftProfile::SinusoidalPpm { .. } => model.sinusoid_ppb(self.acc.now().as_secs_f64()),
            DriftProfile::RandomWalkPpm { step_ppm, bound_ppm, .. } => {
                if first {
                    0
                } else {
                    let rng = self.walk.as_mut().expect("random walk state");
                    let draw: f64 = rng.gen_range(-1.0..=1.0);
                    let bound = ppm_to_ppb(bound_ppm.abs());
                    (self.ppb + ppm_to_ppb(step_ppm * draw)).clamp(-bound, bound)
                }
            }
        };
        let den = model.accumulator_den();
        self.step = Step::from_units(model.period_units(self.ppb), den);
        self.segment_left = if model.drift.is_variable() { model.step_edges } else { u64::MAX };
    }

    /// Index of the edge the next call to [`EdgeCursor::next_edge`] returns.
    pub fn position(&self) -> u64 {
        self.next_index
    }

    /// Drift offset of the current profile step, in ppb.
    pub fn current_ppb(&self) -> i64 {
        self.ppb
    }

    /// Time of the edge the cursor points at, without advancing.
    pub fn peek(&self) -> SimTime {
        self.acc.now()
    }

    #[inline]
    pub fn next_edge(&mut self) -> SimTime {
        let t = self.acc.now();
        self.acc.advance(self.step);
        self.next_index += 1;
        self.segment_left -= 1;
        if self.segment_left == 0 {
            self.begin_segment(false);
        }
        t
    }

    /// Moves forward to edge `index` in O(index / step_edges).
    pub fn seek(&mut self, index: u64) {
        assert!(index >= self.next_index, "cursor cannot move backwards");
        while index > self.next_index {
            let n = (index - self.next_index).min(self.segment_left);
            self.acc.advance_by(self.step, n);
            self.next_index += n;
            self.segment_left -= n;
            if self.segment_left == 0 {
                self.begin_segment(false);
            }
        }
    }
}

impl Iterator for EdgeCursor {
    type Item = SimTime;

    fn next(&mut self) -> Option<SimTime> {
        Some(self.next_edge())
    }
}

/// Time of rising edge number `edge_index`. Edge 0 is at the startup delay.
pub fn next_edge(model: &ClockModel, edge_index: u64) -> SimTime {
    let mut cursor = EdgeCursor::new(model);
    cursor.seek(edge_index);
    cursor.peek()
}

/// Frequency of `model` at time `t`, in Hz.
///
/// Sinusoidal profiles are evaluated continuously at `t`; random walks report
/// the offset of the profile step containing `t`. Offsets are quantized to
/// 1 ppb, the resolution the edge generator uses.
pub fn instantaneous_frequency(model: &ClockModel, t: SimTime) -> f64 {
    let ppb = match model.drift {
        DriftProfile::None => 0,
        DriftProfile::ConstantPpm(ppm) => ppm_to_ppb(ppm),
        DriftProfile::SinusoidalPpm { .. } => model.sinusoid_ppb(t.as_secs_f64()),
        DriftProfile::RandomWalkPpm { .. } => {
            let mut cursor = EdgeCursor::new(model);
            loop {
                let ppb = cursor.current_ppb();
                let next_boundary = cursor.position() + cursor.segment_left;
                cursor.seek(next_boundary);
                if cursor.peek() > t {
                    break ppb;
                }
            }
        }
    };
    let num = model.nominal.num as u128 * (PPB_PER_UNIT + ppb) as u128;
    let den = model.nominal.den as u128 * PPB_PER_UNIT as u128;
    ratio_to_f64(num, den)
}

pub(crate) fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// `num / den` rounded once, after reducing the fraction.
pub(crate) fn ratio_to_f64(num: u128, den: u128) -> f64 {
    let g = gcd(num, den);
    (num / g) as f64 / (den / g) as f64
}
