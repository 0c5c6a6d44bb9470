use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::{DriftSpec, Scenario, ScenarioConfig};
use super::content::ContentGenerator;
use super::PipelineError;
use crate::bt656::image::{write_pgm, write_ppm};
use crate::bt656::{Component, FrameEncoder, FrameGeometry, RawFrame};
use crate::clocks::{
    measure_clock, next_edge, ClockMeter, ClockStats, EdgeCursor, SimTime, SourceStream, TimedByte, DEFAULT_WINDOW,
};
use crate::fsd::{detect_all, frame_starts};
use crate::sync::{
    select_reference, temporal_offsets, AlignmentTrace, OffsetStats, ReferencePolicy, SyncModule, Violation,
};

/// Violations copied into the report.
const REPORTED_VIOLATIONS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub id: usize,
    pub nominal_hz: f64,
    pub drift: DriftSpec,
    pub startup_delay_ns: u64,
    pub bytes: u64,
    /// Over consecutive 300-edge windows of the whole stream.
    pub clock_stats: Option<ClockStats>,
    pub first_frame_start_ns: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartupDelta {
    pub from: usize,
    pub to: usize,
    /// `first_frame_start(to) - first_frame_start(from)`.
    pub delta_ns: f64,
}

/// Everything a run measured. Wall-clock time is kept out of the
/// serialized form so reports of identical runs are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema: u32,
    pub geometry: FrameGeometry,
    pub frame_count: u64,
    pub seed: u64,
    pub channels: usize,
    pub reference_policy: ReferencePolicy,
    pub reference_channel: usize,
    pub operator: String,
    pub sources: Vec<SourceReport>,
    pub startup_deltas: Vec<StartupDelta>,
    pub violations: u64,
    pub checked_ticks: u64,
    pub first_violations: Vec<Violation>,
    pub temporal_offsets: Vec<OffsetStats>,
    pub output_frames: u64,
    pub priming_frames: u64,
    /// Reference frame index of the first output frame.
    pub first_output_frame: Option<u64>,
    pub output_bytes: u64,
    pub event_count: u64,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Result of [`run_scenario`]: the report plus in-memory artifacts.
pub struct ScenarioRun {
    pub report: SimulationReport,
    /// Concatenated output frames.
    pub output: Vec<u8>,
    pub trace: AlignmentTrace,
    /// Input stream of each source, if requested.
    pub source_dumps: Vec<Vec<u8>>,
    pub first_output_frame: Option<RawFrame>,
}

/// Runs a config, resolving input paths against the working directory.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, PipelineError> {
    run_resolved(&config.resolve(None)?)
}

fn source_stream(scenario: &Scenario, i: usize) -> Result<SourceStream, PipelineError> {
    let s = &scenario.sources[i];
    let g = scenario.geometry;
    Ok(match &s.input {
        Some(bytes) => {
            let limit = (scenario.frame_count * g.bytes_per_frame()).min(bytes.len() as u64) as usize;
            SourceStream::recorded(i as u16, &s.clock, g, bytes[..limit].to_vec())?
        }
        None => SourceStream::synthetic(
            i as u16,
            &s.clock,
            g,
            Box::new(ContentGenerator::new(s.content, s.seed)),
            scenario.frame_count,
        )?,
    })
}

/// Picks the reference channel, measuring one window of edges per source
/// when the policy needs it.
pub fn choose_reference(scenario: &Scenario) -> Result<usize, PipelineError> {
    let stats = match scenario.reference {
        ReferencePolicy::Fixed { .. } => scenario
            .sources
            .iter()
            .map(|_| ClockStats {
                min_hz: 0.0,
                mean_hz: 0.0,
                max_hz: 0.0,
                sample_count: 0,
            })
            .collect::<Vec<_>>(),
        ReferencePolicy::SlowestClock => scenario
            .sources
            .iter()
            .map(|s| measure_clock(EdgeCursor::new(&s.clock).take(DEFAULT_WINDOW), DEFAULT_WINDOW))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(select_reference(scenario.reference, &stats)?)
}

/// Stream rows in picture order: `rows[k]` is the picture row of the k-th
/// active line in stream order.
fn stream_rows(g: &FrameGeometry) -> Vec<u32> {
    g.line_map().iter().filter_map(|l| l.row).collect()
}

fn assemble(g: &FrameGeometry, rows: &[u32], active: &[u8]) -> RawFrame {
    let w = g.active_bytes_per_line() as usize;
    let mut data = vec![0u8; active.len()];
    for (k, &r) in rows.iter().enumerate() {
        let r = r as usize;
        data[r * w..(r + 1) * w].copy_from_slice(&active[k * w..(k + 1) * w]);
    }
    RawFrame::for_geometry(g, data)
}

/// The discrete-event engine: merges all sources in time order (writes
/// before reads on ties, then channel index), drives the synchronizer and
/// the pixel operator, and formats output frames.
pub fn run_resolved(scenario: &Scenario) -> Result<ScenarioRun, PipelineError> {
    let started = Instant::now();
    let g = scenario.geometry;
    let k = scenario.sources.len();
    let reference = choose_reference(scenario)?;
    let capacity = g.active_bytes_per_frame();
    let trace_every = if scenario.output.trace.is_some() {
        scenario.output.trace_every
    } else {
        0
    };
    let mut sync = SyncModule::new(k, reference, capacity, scenario.fill_byte, trace_every)?;
    let mut streams = (0..k).map(|i| source_stream(scenario, i)).collect::<Result<Vec<_>, _>>()?;
    let mut meters = (0..k)
        .map(|_| ClockMeter::new(DEFAULT_WINDOW))
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts = vec![0u64; k];
    let mut source_dumps: Vec<Vec<u8>> = if scenario.output.source_dumps {
        vec![Vec::new(); k]
    } else {
        Vec::new()
    };

    let encoder = FrameEncoder::new(g)?;
    let rows = stream_rows(&g);
    let op = scenario.operator;
    let mut active = vec![0u8; capacity];
    let mut output = Vec::new();
    let mut output_frames = 0u64;
    let mut priming_frames = 0u64;
    let mut first_output: Option<(u64, RawFrame)> = None;
    let mut events = 0u64;

    // Order key: time, then writes (non-reference) first, then channel.
    let key = |b: &TimedByte, c: usize| (b.time, c == reference, c);
    let mut pending: Vec<Option<TimedByte>> = streams.iter_mut().map(Iterator::next).collect();
    loop {
        let mut best: Option<(SimTime, bool, usize)> = None;
        for (c, b) in pending.iter().enumerate() {
            if let Some(b) = b {
                let kc = key(b, c);
                if best.is_none_or(|kb| kc < kb) {
                    best = Some(kc);
                }
            }
        }
        let Some((_, is_ref, c)) = best else { break };
        let b = pending[c].take().expect("selected channel has a byte");
        events += 1;
        counts[c] += 1;
        meters[c].push(b.time);
        if let Some(d) = source_dumps.get_mut(c) {
            d.push(b.value);
        }
        if is_ref {
            if let Some(tick) = sync.read_tick(&b) {
                if let Some(idx) = tick.active_index {
                    let idx = idx as usize;
                    active[idx] = op.apply_byte(Component::at(idx % 4), tick.bytes);
                    if idx + 1 == capacity {
                        if tick.all_live || scenario.include_priming {
                            let frame = assemble(&g, &rows, &active);
                            encoder.encode_into(&frame, &mut output)?;
                            output_frames += 1;
                            if first_output.is_none() {
                                first_output = Some((tick.session, frame));
                            }
                        } else {
                            priming_frames += 1;
                        }
                    }
                }
            }
        } else {
            sync.write_tick(c, &b)?;
        }
        pending[c] = streams[c].next();
    }

    let first_starts: Vec<Option<SimTime>> = (0..k).map(|c| sync.first_frame_start(c)).collect();
    let trace = sync.into_trace();
    let sources = scenario
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| SourceReport {
            id: i,
            nominal_hz: s.clock.nominal.as_f64(),
            drift: s.drift.clone(),
            startup_delay_ns: s.clock.startup_delay_ns,
            bytes: counts[i],
            clock_stats: meters[i].finish().ok(),
            first_frame_start_ns: first_starts[i].map(|t| t.as_ns_f64()),
        })
        .collect();
    let temporal = if trace.is_empty() {
        Vec::new()
    } else {
        temporal_offsets(&trace)?
    };
    let report = SimulationReport {
        schema: 1,
        geometry: g,
        frame_count: scenario.frame_count,
        seed: scenario.seed,
        channels: k,
        reference_policy: scenario.reference,
        reference_channel: reference,
        operator: op.name(),
        sources,
        startup_deltas: startup_deltas(&first_starts),
        violations: trace.violation_count(),
        checked_ticks: trace.checked_ticks(),
        first_violations: trace.violations().iter().take(REPORTED_VIOLATIONS).cloned().collect(),
        temporal_offsets: temporal,
        output_frames,
        priming_frames,
        first_output_frame: first_output.as_ref().map(|(n, _)| *n),
        output_bytes: output.len() as u64,
        event_count: events,
        wall_clock: started.elapsed(),
    };
    Ok(ScenarioRun {
        report,
        output,
        trace,
        source_dumps,
        first_output_frame: first_output.map(|(_, f)| f),
    })
}

/// Pairwise differences of first frame-start times, `from < to`.
pub fn startup_deltas(first_starts: &[Option<SimTime>]) -> Vec<StartupDelta> {
    let mut out = Vec::new();
    for (i, a) in first_starts.iter().enumerate() {
        for (j, b) in first_starts.iter().enumerate().skip(i + 1) {
            if let (Some(a), Some(b)) = (a, b) {
                out.push(StartupDelta {
                    from: i,
                    to: j,
                    delta_ns: b.ns_since(a),
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockAnalysisRow {
    pub id: usize,
    pub nominal_hz: f64,
    pub drift: DriftSpec,
    pub startup_delay_ns: u64,
    pub edges: u64,
    pub stats: ClockStats,
    /// Mean offset from nominal.
    pub mean_offset_ppm: f64,
    /// Half of max minus min, relative to nominal.
    pub envelope_ppm: f64,
    pub first_frame_start_ns: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockAnalysis {
    pub window: usize,
    pub sources: Vec<ClockAnalysisRow>,
    pub startup_deltas: Vec<StartupDelta>,
}

/// Per-source clock statistics over the scenario's edges and the
/// differences between first frame starts.
pub fn analyze_clocks(scenario: &Scenario) -> Result<ClockAnalysis, PipelineError> {
    let g = scenario.geometry;
    let mut rows = Vec::new();
    let mut starts = Vec::new();
    for (i, s) in scenario.sources.iter().enumerate() {
        let (edges, first_start) = match &s.input {
            Some(bytes) => {
                let n = (scenario.frame_count * g.bytes_per_frame()).min(bytes.len() as u64);
                let starts = frame_starts(&detect_all(&bytes[..n as usize]));
                (n, starts.first().map(|e| e.byte_offset))
            }
            None => (scenario.frame_count * g.bytes_per_frame(), Some(g.frame_start_offset())),
        };
        let stats = measure_clock(EdgeCursor::new(&s.clock).take(edges as usize), DEFAULT_WINDOW)?;
        let nominal = s.clock.nominal.as_f64();
        let start = first_start.map(|o| next_edge(&s.clock, o));
        starts.push(start);
        rows.push(ClockAnalysisRow {
            id: i,
            nominal_hz: nominal,
            drift: s.drift.clone(),
            startup_delay_ns: s.clock.startup_delay_ns,
            edges,
            mean_offset_ppm: (stats.mean_hz / nominal - 1.0) * 1e6,
            envelope_ppm: (stats.max_hz - stats.min_hz) / 2.0 / nominal * 1e6,
            stats,
            first_frame_start_ns: start.map(|t| t.as_ns_f64()),
        });
    }
    Ok(ClockAnalysis {
        window: DEFAULT_WINDOW,
        sources: rows,
        startup_deltas: startup_deltas(&starts),
    })
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PipelineError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| PipelineError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| PipelineError::io(path, e))?;
    tmp.persist(path).map_err(|e| PipelineError::io(path, e.error))?;
    Ok(())
}

/// Writes the configured artifacts into `dir`, creating it if needed.
pub fn write_artifacts(run: &ScenarioRun, scenario: &Scenario, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let out = &scenario.output;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<(), PipelineError> {
        let p = dir.join(name);
        write_atomic(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    if let Some(name) = &out.dump {
        put(name, &run.output)?;
    }
    if let Some(name) = &out.trace {
        let mut csv = Vec::new();
        run.trace.write_csv(&mut csv)?;
        put(name, &csv)?;
    }
    for (i, d) in run.source_dumps.iter().enumerate() {
        put(&format!("source{i}.656"), d)?;
    }
    if out.image {
        if let Some(f) = &run.first_output_frame {
            let mut ppm = Vec::new();
            write_ppm(f, &mut ppm).map_err(|e| PipelineError::io(dir, e))?;
            put("output_frame.ppm", &ppm)?;
            let mut pgm = Vec::new();
            write_pgm(f, &mut pgm).map_err(|e| PipelineError::io(dir, e))?;
            put("output_frame.pgm", &pgm)?;
        }
    }
    if let Some(name) = &out.report {
        put(name, run.report.to_json().as_bytes())?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::content::decode_frame_number;
    use crate::pipeline::interface_decode;

    fn config(json: &str) -> Scenario {
        ScenarioConfig::from_json(json).unwrap().resolve(None).unwrap()
    }

    #[test]
    fn identity_pipeline_reproduces_reference() {
        let mut sc = config(r#"{"schema":1,"geometry":"desk","frame_count":5,"sources":[{},{}]}"#);
        sc.output.source_dumps = true;
        let run = run_resolved(&sc).unwrap();
        let r = &run.report;
        assert_eq!(r.violations, 0);
        assert_eq!((r.output_frames, r.priming_frames), (4, 1));
        assert_eq!(r.first_output_frame, Some(1));
        let b = 20_480;
        assert_eq!(run.output, run.source_dumps[0][b..]);
        assert_eq!(r.event_count, 2 * 5 * b as u64);
    }

    #[test]
    fn startup_delta_is_reported() {
        let sc = config(
            r#"{"schema":1,"geometry":"desk","frame_count":20,
            "sources":[{},{"clock":{"startup_delay_ns":10000000}}]}"#,
        );
        let run = run_resolved(&sc).unwrap();
        assert_eq!(run.report.startup_deltas.len(), 1);
        assert_eq!(run.report.startup_deltas[0].delta_ns, 10_000_000.0);
        assert_eq!(run.report.violations, 0);
        let analysis = analyze_clocks(&sc).unwrap();
        assert_eq!(analysis.startup_deltas, run.report.startup_deltas);
    }

    #[test]
    fn numbered_frames_show_temporal_offset() {
        let sc = config(
            r#"{"schema":1,"geometry":"desk","frame_count":8,"operator":"passthrough:1",
            "sources":[{},{"clock":{"startup_delay_ns":1000000}}]}"#,
        );
        let run = run_resolved(&sc).unwrap();
        let off = run.report.temporal_offsets[1];
        let first_ref = run.report.first_output_frame.unwrap();
        let decoded = interface_decode(&run.output, &sc.geometry);
        let shown = decode_frame_number(&decoded.pictures[0].frame).unwrap() as i64;
        // The channel-1 frame on screen lags the reference frame.
        assert!((off.min..=off.max).contains(&(shown - first_ref as i64)));
        assert!(off.max < 0);
    }

    #[test]
    fn slowest_clock_policy() {
        let sc = config(
            r#"{"schema":1,"geometry":"desk","frame_count":3,"reference":{"policy":"slowest_clock"},
            "sources":[{"clock":{"drift":{"kind":"constant","ppm":11}}},
                       {"clock":{"drift":{"kind":"constant","ppm":-7}}},
                       {"clock":{"drift":{"kind":"constant","ppm":-7}}}]}"#,
        );
        assert_eq!(choose_reference(&sc).unwrap(), 1);
        let run = run_resolved(&sc).unwrap();
        assert_eq!(run.report.reference_channel, 1);
        assert_eq!(run.report.violations, 0);
    }

    #[test]
    fn include_priming_emits_every_frame() {
        let mut sc = config(r#"{"schema":1,"geometry":"desk","frame_count":3,"sources":[{},{}]}"#);
        sc.include_priming = true;
        let run = run_resolved(&sc).unwrap();
        assert_eq!((run.report.output_frames, run.report.priming_frames), (3, 0));
        assert_eq!(run.output.len(), 3 * 20_480);
    }

    #[test]
    fn artifacts_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut sc = config(r#"{"schema":1,"geometry":"desk","frame_count":3,"sources":[{},{}]}"#);
        sc.output.image = true;
        let run = run_resolved(&sc).unwrap();
        let files = write_artifacts(&run, &sc, dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            ["output.656", "trace.csv", "output_frame.ppm", "output_frame.pgm", "report.json"]
        );
        let report: SimulationReport =
            serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report.output_frames, run.report.output_frames);
    }
}
