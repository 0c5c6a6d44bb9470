use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::fifo::SlotTag;
use super::SyncError;
use crate::clocks::SimTime;

/// Violations kept in full; beyond this only the count grows.
pub const MAX_KEPT_VIOLATIONS: usize = 1_000;

/// One sampled read tick.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub tick_time_ns: f64,
    pub reference: SlotTag,
    /// Provenance of each channel's output byte; `None` while that channel
    /// still emits fill.
    pub channels: Vec<Option<SlotTag>>,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index among active read ticks.
    pub tick: u64,
    pub tick_time_ns: f64,
    pub channel: usize,
    pub expected: (u16, u16),
    pub found: (u16, u16),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetStats {
    pub channel: usize,
    pub min: i64,
    pub max: i64,
    /// Most frequent offset, lowest on ties.
    pub mode: i64,
    pub samples: u64,
}

/// Histogram fed mostly with long runs of one value.
#[derive(Clone, Debug, Default)]
struct OffsetHistogram {
    counts: BTreeMap<i64, u64>,
    run: Option<(i64, u64)>,
}

impl OffsetHistogram {
    #[inline]
    fn add(&mut self, offset: i64) {
        match &mut self.run {
            Some((v, n)) if *v == offset => *n += 1,
            run => {
                if let Some((v, n)) = run.take() {
                    *self.counts.entry(v).or_default() += n;
                }
                *run = Some((offset, 1));
            }
        }
    }

    fn snapshot(&self) -> BTreeMap<i64, u64> {
        let mut counts = self.counts.clone();
        if let Some((v, n)) = self.run {
            *counts.entry(v).or_default() += n;
        }
        counts
    }
}

/// Ground-truth record of what the synchronizer emitted.
#[derive(Clone, Debug)]
pub struct AlignmentTrace {
    k: usize,
    reference: usize,
    every: u64,
    rows: Vec<TraceRow>,
    active_ticks: u64,
    checked_ticks: u64,
    violation_count: u64,
    violations: Vec<Violation>,
    offsets: Vec<OffsetHistogram>,
}

impl AlignmentTrace {
    /// Keeps a row for every `every`-th active read tick; 0 keeps none.
    pub fn new(k: usize, reference: usize, every: u64) -> AlignmentTrace {
        AlignmentTrace {
            k,
            reference,
            every,
            rows: Vec::new(),
            active_ticks: 0,
            checked_ticks: 0,
            violation_count: 0,
            violations: Vec::new(),
            offsets: vec![OffsetHistogram::default(); k],
        }
    }

    pub fn channels(&self) -> usize {
        self.k
    }

    pub fn reference_channel(&self) -> usize {
        self.reference
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn active_ticks(&self) -> u64 {
        self.active_ticks
    }

    /// Ticks on which every channel was live and alignment was checked.
    pub fn checked_ticks(&self) -> u64 {
        self.checked_ticks
    }

    pub fn violation_count(&self) -> u64 {
        self.violation_count
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn is_empty(&self) -> bool {
        self.active_ticks == 0
    }

    /// Records one active read tick. `channels[reference]` is ignored.
    pub fn record(&mut self, time: SimTime, reference: SlotTag, channels: &[Option<SlotTag>]) {
        debug_assert_eq!(channels.len(), self.k);
        let tick = self.active_ticks;
        self.active_ticks += 1;
        let all_live = channels
            .iter()
            .enumerate()
            .all(|(c, t)| c == self.reference || t.is_some());
        let mut violation = false;
        for (c, tag) in channels.iter().enumerate() {
            if c == self.reference {
                self.offsets[c].add(0);
                continue;
            }
            let Some(tag) = tag else { continue };
            self.offsets[c].add(tag.frame as i64 - reference.frame as i64);
            if all_live && (tag.line, tag.sample) != (reference.line, reference.sample) {
                violation = true;
                if self.violations.len() < MAX_KEPT_VIOLATIONS {
                    self.violations.push(Violation {
                        tick,
                        tick_time_ns: time.as_ns_f64(),
                        channel: c,
                        expected: (reference.line, reference.sample),
                        found: (tag.line, tag.sample),
                    });
                }
            }
        }
        if all_live {
            self.checked_ticks += 1;
        }
        if violation {
            self.violation_count += 1;
        }
        if self.every > 0 && tick % self.every == 0 {
            let mut row_channels = channels.to_vec();
            row_channels[self.reference] = Some(reference);
            self.rows.push(TraceRow {
                tick_time_ns: time.as_ns_f64(),
                reference,
                channels: row_channels,
                violation,
            });
        }
    }

    /// Full histogram of `frame(channel) - frame(reference)`.
    pub fn offset_histogram(&self, channel: usize) -> BTreeMap<i64, u64> {
        self.offsets[channel].snapshot()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SyncError> {
        write_rows(self.k, &self.rows, out)
    }
}

/// Per-channel min/max/mode of the temporal frame offset.
pub fn temporal_offsets(trace: &AlignmentTrace) -> Result<Vec<OffsetStats>, SyncError> {
    if trace.is_empty() {
        return Err(SyncError::EmptyTrace);
    }
    Ok((0..trace.k)
        .filter_map(|c| {
            let hist = trace.offset_histogram(c);
            let (&min, _) = hist.first_key_value()?;
            let (&max, _) = hist.last_key_value()?;
            let (mode, _) = hist.iter().fold((min, 0), |best, (&v, &n)| if n > best.1 { (v, n) } else { best });
            Some(OffsetStats {
                channel: c,
                min,
                max,
                mode,
                samples: hist.values().sum(),
            })
        })
        .collect())
}

fn header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["tick_time_ns", "ref_frame", "ref_line", "ref_sample"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in 0..k {
        for f in ["frame", "line", "sample"] {
            h.push(format!("ch{c}_{f}"));
        }
    }
    h.push("violation".into());
    h
}

/// Writes rows in the trace CSV layout.
pub fn write_rows<W: Write>(k: usize, rows: &[TraceRow], out: W) -> Result<(), SyncError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(k))?;
    let mut record: Vec<String> = Vec::with_capacity(5 + 3 * k);
    for row in rows {
        record.clear();
        record.push(format!("{:.3}", row.tick_time_ns));
        let r = row.reference;
        record.extend([r.frame.to_string(), r.line.to_string(), r.sample.to_string()]);
        for tag in &row.channels {
            match tag {
                Some(t) => record.extend([t.frame.to_string(), t.line.to_string(), t.sample.to_string()]),
                None => record.extend([String::new(), String::new(), String::new()]),
            }
        }
        record.push(u8::from(row.violation).to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| SyncError::Csv(e.into()))?;
    Ok(())
}

/// Parsed trace CSV: channel count and rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTrace {
    pub channels: usize,
    pub rows: Vec<TraceRow>,
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<ParsedTrace, SyncError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head = rdr.headers()?.clone();
    let n = head.len();
    if n < 8 || (n - 5) % 3 != 0 {
        return Err(SyncError::MalformedTrace {
            line: 1,
            reason: format!("unexpected column count {n}"),
        });
    }
    let k = (n - 5) / 3;
    if head.iter().ne(header(k).iter().map(String::as_str)) {
        return Err(SyncError::MalformedTrace {
            line: 1,
            reason: "unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = |reason: String| SyncError::MalformedTrace { line, reason };
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> Result<u64, SyncError> {
            field(j)
                .parse::<u64>()
                .map_err(|_| bad(format!("column {} is not an integer: {:?}", head.get(j).unwrap_or("?"), field(j))))
        };
        let tag = |j: usize| -> Result<SlotTag, SyncError> {
            let (f, l, s) = (num(j)?, num(j + 1)?, num(j + 2)?);
            if f > u32::MAX as u64 || l > u16::MAX as u64 || s > u16::MAX as u64 {
                return Err(bad("provenance value out of range".into()));
            }
            Ok(SlotTag {
                frame: f as u32,
                line: l as u16,
                sample: s as u16,
            })
        };
        let tick_time_ns = field(0)
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite())
            .ok_or_else(|| bad(format!("bad tick time {:?}", field(0))))?;
        let reference = tag(1)?;
        let mut channels = Vec::with_capacity(k);
        for c in 0..k {
            let j = 4 + 3 * c;
            if (j..j + 3).all(|j| field(j).is_empty()) {
                channels.push(None);
            } else {
                channels.push(Some(tag(j)?));
            }
        }
        let violation = match field(n - 1) {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("violation flag must be 0 or 1, got {other:?}"))),
        };
        rows.push(TraceRow {
            tick_time_ns,
            reference,
            channels,
            violation,
        });
    }
    Ok(ParsedTrace { channels: k, rows })
}

/// Result of re-checking trace rows from their provenance columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub rows: usize,
    /// Rows where every channel carried data.
    pub checked: usize,
    pub violations: Vec<TraceViolation>,
    /// Rows whose violation flag disagrees with the recomputed verdict.
    pub flag_mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceViolation {
    /// 0-based data row.
    pub row: usize,
    pub tick_time_ns: f64,
    pub channels: Vec<usize>,
}

pub fn check_rows(rows: &[TraceRow]) -> TraceCheck {
    let mut out = TraceCheck {
        rows: rows.len(),
        ..TraceCheck::default()
    };
    for (i, row) in rows.iter().enumerate() {
        let complete = row.channels.iter().all(Option::is_some);
        let bad: Vec<usize> = if complete {
            out.checked += 1;
            row.channels
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_some_and(|t| (t.line, t.sample) != (row.reference.line, row.reference.sample)))
                .map(|(c, _)| c)
                .collect()
        } else {
            Vec::new()
        };
        if row.violation != !bad.is_empty() {
            out.flag_mismatches += 1;
        }
        if !bad.is_empty() {
            out.violations.push(TraceViolation {
                row: i,
                tick_time_ns: row.tick_time_ns,
                channels: bad,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(frame: u32, line: u16, sample: u16) -> SlotTag {
        SlotTag { frame, line, sample }
    }

    #[test]
    fn violation_only_when_all_live() {
        let mut t = AlignmentTrace::new(3, 0, 1);
        let r = tag(5, 20, 300);
        t.record(SimTime::ZERO, r, &[None, Some(tag(4, 20, 300)), None]);
        t.record(SimTime::from_ns(1), r, &[None, Some(tag(4, 21, 300)), None]);
        assert_eq!(t.violation_count(), 0);
        t.record(SimTime::from_ns(2), r, &[None, Some(tag(4, 20, 300)), Some(tag(6, 20, 301))]);
        assert_eq!(t.violation_count(), 1);
        assert_eq!(t.violations()[0].channel, 2);
        assert_eq!(t.violations()[0].tick, 2);
        assert_eq!(t.checked_ticks(), 1);
    }

    #[test]
    fn offsets_min_max_mode() {
        let mut t = AlignmentTrace::new(2, 1, 0);
        for (n, off) in [(3, -1i64), (5, 0), (2, -1), (1, 1)] {
            for _ in 0..n {
                t.record(SimTime::ZERO, tag(10, 1, 1), &[Some(tag((10 + off) as u32, 1, 1)), None]);
            }
        }
        let stats = temporal_offsets(&t).unwrap();
        assert_eq!(
            stats[0],
            OffsetStats {
                channel: 0,
                min: -1,
                max: 1,
                mode: -1,
                samples: 11
            }
        );
        assert_eq!((stats[1].min, stats[1].max, stats[1].samples), (0, 0, 11));
        assert!(t.rows().is_empty());
    }

    #[test]
    fn empty_trace_has_no_offsets() {
        assert!(matches!(temporal_offsets(&AlignmentTrace::new(2, 0, 1)), Err(SyncError::EmptyTrace)));
    }

    #[test]
    fn csv_round_trip_and_check() {
        let mut t = AlignmentTrace::new(2, 0, 2);
        for i in 0..10u16 {
            let ch = if i < 4 { None } else { Some(tag(0, 20, 100 + i)) };
            t.record(SimTime::from_ns(37 * i as u64), tag(1, 20, 100 + i), &[None, ch]);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "tick_time_ns,ref_frame,ref_line,ref_sample,ch0_frame,ch0_line,ch0_sample,ch1_frame,ch1_line,ch1_sample,violation\n"
        ));
        let parsed = read_trace_csv(&buf[..]).unwrap();
        assert_eq!(parsed.channels, 2);
        assert_eq!(parsed.rows, t.rows());
        let check = check_rows(&parsed.rows);
        assert_eq!((check.rows, check.checked, check.violations.len()), (5, 3, 0));

        let mut rows = parsed.rows;
        rows[3].channels[1].as_mut().unwrap().sample += 1;
        let check = check_rows(&rows);
        assert_eq!(check.violations.len(), 1);
        assert_eq!(check.violations[0].row, 3);
        assert_eq!(check.flag_mismatches, 1);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_trace_csv(&b"a,b\n1,2\n"[..]).is_err());
        let bad = "tick_time_ns,ref_frame,ref_line,ref_sample,ch0_frame,ch0_line,ch0_sample,violation\n1.0,x,1,1,0,1,1,0\n";
        assert!(matches!(
            read_trace_csv(bad.as_bytes()),
            Err(SyncError::MalformedTrace { line: 2, .. })
        ));
    }
}
