use serde::{Deserialize, Serialize};

use super::model::ratio_to_f64;
use super::time::{SimTime, FS_PER_SEC};
use super::ClockError;

/// Window length used by the clock measurements (300 samples per window).
pub const DEFAULT_WINDOW: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockStats {
    pub min_hz: f64,
    pub mean_hz: f64,
    pub max_hz: f64,
    /// Edges that fell into complete windows.
    pub sample_count: u64,
}

/// Incremental form of [`measure_clock`].
///
/// Edges are grouped into consecutive, non-overlapping windows of `window`
/// edges; each window contributes `(window - 1) / span` as its frequency.
/// Trailing edges that do not fill a window are ignored.
#[derive(Clone, Debug)]
pub struct ClockMeter {
    window: usize,
    in_window: usize,
    first: SimTime,
    last: SimTime,
    windows: u64,
    min_hz: f64,
    max_hz: f64,
    sum_hz: f64,
}

impl ClockMeter {
    pub fn new(window: usize) -> Result<ClockMeter, ClockError> {
        if window < 2 {
            return Err(ClockError::WindowTooSmall(window));
        }
        Ok(ClockMeter {
            window,
            in_window: 0,
            first: SimTime::ZERO,
            last: SimTime::ZERO,
            windows: 0,
            min_hz: f64::INFINITY,
            max_hz: f64::NEG_INFINITY,
            sum_hz: 0.0,
        })
    }

    #[inline]
    pub fn push(&mut self, t: SimTime) {
        if self.in_window == 0 {
            self.first = t;
        }
        self.last = t;
        self.in_window += 1;
        if self.in_window == self.window {
            self.close_window();
        }
    }

    fn close_window(&mut self) {
        let hz = window_frequency(&self.first, &self.last, self.window - 1);
        self.min_hz = self.min_hz.min(hz);
        self.max_hz = self.max_hz.max(hz);
        self.sum_hz += hz;
        self.windows += 1;
        self.in_window = 0;
    }

    pub fn windows(&self) -> u64 {
        self.windows
    }

    pub fn finish(&self) -> Result<ClockStats, ClockError> {
        if self.windows == 0 {
            return Err(ClockError::InsufficientData {
                needed: self.window,
                got: self.in_window,
            });
        }
        let mean = (self.sum_hz / self.windows as f64).clamp(self.min_hz, self.max_hz);
        Ok(ClockStats {
            min_hz: self.min_hz,
            mean_hz: mean,
            max_hz: self.max_hz,
            sample_count: self.windows * self.window as u64,
        })
    }
}

/// `intervals / (last - first)` in Hz, exact when both times come from the
/// same clock.
fn window_frequency(first: &SimTime, last: &SimTime, intervals: usize) -> f64 {
    match last.units_since(first) {
        Some((units, den)) if units > 0 => {
            let num = intervals as u128 * FS_PER_SEC as u128 * den as u128;
            ratio_to_f64(num, units)
        }
        _ => intervals as f64 / (last.ns_since(first) * 1e-9),
    }
}

/// Min/mean/max frequency over consecutive windows of `window` edges.
pub fn measure_clock<I>(edge_times: I, window: usize) -> Result<ClockStats, ClockError>
where
    I: IntoIterator<Item = SimTime>,
{
    let mut meter = ClockMeter::new(window)?;
    for t in edge_times {
        meter.push(t);
    }
    meter.finish()
}
