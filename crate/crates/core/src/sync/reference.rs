use serde::{Deserialize, Serialize};

use super::SyncError;
use crate::clocks::ClockStats;

/// How the reference channel (the output clock) is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferencePolicy {
    Fixed {
        #[serde(default)]
        index: usize,
    },
    SlowestClock,
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        ReferencePolicy::Fixed { index: 0 }
    }
}

/// Picks the reference channel. Slowest clock means lowest mean frequency,
/// lowest index on ties.
pub fn select_reference(policy: ReferencePolicy, clocks: &[ClockStats]) -> Result<usize, SyncError> {
    if clocks.is_empty() {
        return Err(SyncError::NoClockStats);
    }
    match policy {
        ReferencePolicy::Fixed { index } if index < clocks.len() => Ok(index),
        ReferencePolicy::Fixed { index } => Err(SyncError::ChannelOutOfRange {
            channel: index,
            k: clocks.len(),
        }),
        ReferencePolicy::SlowestClock => {
            let mut best = 0;
            for (i, s) in clocks.iter().enumerate().skip(1) {
                if s.mean_hz < clocks[best].mean_hz {
                    best = i;
                }
            }
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(mean_hz: f64) -> ClockStats {
        ClockStats {
            min_hz: mean_hz,
            mean_hz,
            max_hz: mean_hz,
            sample_count: 300,
        }
    }

    #[test]
    fn fixed_index() {
        let s = [stats(27e6), stats(27e6)];
        assert_eq!(select_reference(ReferencePolicy::Fixed { index: 0 }, &s).unwrap(), 0);
        assert!(matches!(
            select_reference(ReferencePolicy::Fixed { index: 2 }, &s),
            Err(SyncError::ChannelOutOfRange { channel: 2, k: 2 })
        ));
    }

    #[test]
    fn slowest_clock_and_ties() {
        let s = [stats(27_000_300.0), stats(26_999_800.0)];
        assert_eq!(select_reference(ReferencePolicy::SlowestClock, &s).unwrap(), 1);
        let s = [stats(27e6), stats(27e6), stats(27e6)];
        assert_eq!(select_reference(ReferencePolicy::SlowestClock, &s).unwrap(), 0);
        assert!(select_reference(ReferencePolicy::SlowestClock, &[]).is_err());
    }

    #[test]
    fn policy_json() {
        let p: ReferencePolicy = serde_json::from_str(r#"{"policy":"slowest_clock"}"#).unwrap();
        assert_eq!(p, ReferencePolicy::SlowestClock);
        let p: ReferencePolicy = serde_json::from_str(r#"{"policy":"fixed","index":1}"#).unwrap();
        assert_eq!(p, ReferencePolicy::Fixed { index: 1 });
    }
}
