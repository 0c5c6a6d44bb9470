//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the lines always show up
//! in `cargo test` output.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mvsync_core::bt656::{encode_frame, parse_xy, decode_stream, FrameGeometry, RawFrame, Region};
use mvsync_core::clocks::{next_edge, ClockModel};
use mvsync_core::fsd::detect_all;
use mvsync_core::pipeline::{
    analyze_clocks, run_resolved, write_artifacts, Scenario, ScenarioConfig, ScenarioRun,
};
use mvsync_core::power::{case_study, devices_per_ldo, total_power, Decimal, LdoSpec};
use mvsync_core::SimTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn scenario(json: &str) -> Scenario {
    ScenarioConfig::from_json(json)
        .expect("scenario parses")
        .resolve(None)
        .expect("scenario is valid")
}

fn frame_period_ns(g: &FrameGeometry) -> f64 {
    g.bytes_per_frame() as f64 * 1e9 / 27e6
}

// 1 ------------------------------------------------------------------------

fn frame_size() -> Outcome {
    let g = FrameGeometry::default();
    let f = RawFrame::from_fn(&g, |r, c| (1 + (r + c) % 250) as u8);
    let n = encode_frame(&f, &g).map_err(|e| e.to_string())?.len();
    ensure!(n == 900_900, "encoded frame is {n} bytes");
    Ok(format!("{n} bytes per default frame"))
}

// 2, 3 -------------------------------------------------------------------------

fn power_tables() -> Outcome {
    let cs = case_study();
    let t2 = total_power(&cs.device_power);
    let t3 = total_power(&cs.supply_power);
    ensure!(t2 == "1569.5".parse::<Decimal>().unwrap(), "table 2 total {t2} mW");
    ensure!(t3 == "1850".parse::<Decimal>().unwrap(), "table 3 total {t3} mW");
    // Same totals in watts, exactly.
    let w = |d: Decimal| Decimal::from_micros(d.micros() / 1000);
    ensure!(w(t2).to_string() == "1.5695", "table 2 in W: {}", w(t2));
    ensure!(w(t3).to_string() == "1.85", "table 3 in W: {}", w(t3));
    Ok(format!("table 2 = {} W, table 3 = {} W", w(t2), w(t3)))
}

fn ldo_sizing() -> Outcome {
    let a = devices_per_ldo(&LdoSpec::new("AP7312", "150"), "32.9".parse().unwrap()).map_err(|e| e.to_string())?;
    let m = devices_per_ldo(&LdoSpec::new("MCP1700T", "250"), "37".parse().unwrap()).map_err(|e| e.to_string())?;
    ensure!((a, m) == (4, 6), "got ({a}, {m})");
    Ok("150/32.9 -> 4 decoders, 250/37 -> 6 encoders (names swapped in the source text)".into())
}

// 4, 5 -------------------------------------------------------------------------

fn alignment_config(geometry: &str, frames: u64, phase: f64, sign: f64, seed: u64) -> Scenario {
    let g = FrameGeometry::by_name(geometry).unwrap();
    let delay = (0.4 * frame_period_ns(&g)).round() as u64;
    scenario(&format!(
        r#"{{"schema":1,"geometry":"{geometry}","frame_count":{frames},"seed":{seed},
            "output":{{"trace_every":0}},
            "sources":[{{}},
              {{"clock":{{"startup_delay_ns":{delay},
                "drift":{{"kind":"sinusoidal","ppm":{amp},"period_s":0.05,"phase":{phase}}}}}}}]}}"#,
        amp = 100.0 * sign
    ))
}

fn check_aligned(run: &ScenarioRun, frames: u64) -> Result<(), String> {
    let r = &run.report;
    ensure!(r.violations == 0, "{} violations, first {:?}", r.violations, r.first_violations.first());
    ensure!(r.output_frames + r.priming_frames == frames, "frame accounting {r:?}");
    let active = r.geometry.active_bytes_per_frame() as u64;
    ensure!(
        r.checked_ticks == r.output_frames * active,
        "checked {} ticks for {} output frames",
        r.checked_ticks,
        r.output_frames
    );
    ensure!(r.output_frames > 0, "no output frames");
    Ok(())
}

fn spatial_alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    // The stated case plus randomized phases and drift signs.
    let mut cases = vec![(0.0, 1.0)];
    for _ in 0..3 {
        cases.push((rng.gen_range(0.0..std::f64::consts::TAU), if rng.gen() { 1.0 } else { -1.0 }));
    }
    for (i, (phase, sign)) in cases.into_iter().enumerate() {
        let sc = alignment_config("desk", 300, phase, sign, i as u64);
        let run = run_resolved(&sc).map_err(|e| e.to_string())?;
        check_aligned(&run, 300)?;
        checked += run.report.checked_ticks;
    }
    Ok(format!("0 violations over {checked} checked ticks in 4 runs of 300 desk frames"))
}

fn full_geometry_run() -> Outcome {
    let sc = alignment_config("ntsc", 30, 0.0, 1.0, 0);
    let t = Instant::now();
    let run = run_resolved(&sc).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    check_aligned(&run, 30)?;
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{} events, 0 violations in {:.1} s",
        run.report.event_count,
        elapsed.as_secs_f64()
    ))
}

// 6 ------------------------------------------------------------------------

/// Latest frame whose byte at in-frame offset `off` a channel has sent by
/// time `t`, straight from the clock schedule.
fn oracle_frame(clock: &ClockModel, g: &FrameGeometry, frames: u64, off: u64, t: SimTime) -> Option<i64> {
    let b = g.bytes_per_frame();
    let at = |m: u64| next_edge(clock, m * b + off);
    if at(0) > t {
        return None;
    }
    let (mut lo, mut hi) = (0u64, frames - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if at(mid) <= t {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(lo as i64)
}

fn temporal_offset_bound() -> Outcome {
    let frames = 120;
    let g = FrameGeometry::desk();
    let t_frame = frame_period_ns(&g);
    let mut summary = Vec::new();
    let cases: [(f64, f64, &str, &str); 5] = [
        (0.0, 0.3, r#"{"kind":"constant","ppm":100}"#, r#"{"kind":"constant","ppm":-100}"#),
        (0.0, 1.0, "{}", r#"{"kind":"sinusoidal","ppm":100,"period_s":0.02}"#),
        (0.0, 1.7, r#"{"kind":"constant","ppm":-100}"#, r#"{"kind":"constant","ppm":100}"#),
        (0.0, 2.0, "{}", r#"{"kind":"random_walk","ppm":100,"step_ppm":20}"#),
        (2.0, 0.45, r#"{"kind":"constant","ppm":100}"#, r#"{"kind":"sinusoidal","ppm":-100,"period_s":0.03,"phase":1}"#),
    ];
    for (d0, d1, drift0, drift1) in cases {
        let (n0, n1) = ((d0 * t_frame).round() as u64, (d1 * t_frame).round() as u64);
        let sc = scenario(&format!(
            r#"{{"schema":1,"geometry":"desk","frame_count":{frames},"seed":3,"output":{{"trace_every":53}},
                "sources":[{{"clock":{{"startup_delay_ns":{n0},"drift":{drift0}}}}},
                           {{"clock":{{"startup_delay_ns":{n1},"drift":{drift1}}}}}]}}"#
        ));
        let run = run_resolved(&sc).map_err(|e| e.to_string())?;
        let d_max = n0.max(n1) as f64;
        let bound = (d_max / t_frame).ceil() as i64 + 1;
        let off = run.report.temporal_offsets[1];
        ensure!(
            off.min.abs() <= bound && off.max.abs() <= bound,
            "delays ({d0}, {d1}) frames: offsets [{}, {}] exceed {bound}",
            off.min,
            off.max
        );
        // Cross-check sampled ticks against the schedule.
        let mut compared = 0;
        for row in run.trace.rows() {
            let Some(ch) = row.channels[1] else { continue };
            let r = row.reference;
            let off = (r.line as u64 - 1) * g.bytes_per_line() as u64 + r.sample as u64;
            let t = next_edge(&sc.sources[0].clock, r.frame as u64 * g.bytes_per_frame() + off);
            let expect = oracle_frame(&sc.sources[1].clock, &g, frames, off, t).ok_or("oracle found no frame")?;
            ensure!(
                ch.frame as i64 == expect,
                "ref frame {} offset {off}: channel frame {} but schedule says {expect}",
                r.frame,
                ch.frame
            );
            compared += 1;
        }
        ensure!(compared > 1000, "only {compared} rows compared");
        summary.push(format!("[{},{}]<={bound}", off.min, off.max));
    }
    Ok(format!("offset ranges {} match the schedule oracle", summary.join(" ")))
}

// 7 ------------------------------------------------------------------------

/// Reference detector: find every FF 00 00 XY, check protection bits by
/// hand, report SAV V-bit falls.
fn brute_force_starts(bytes: &[u8]) -> Vec<(u64, bool)> {
    let mut out = Vec::new();
    let mut last_v: Option<bool> = None;
    for i in 0..bytes.len().saturating_sub(3) {
        if bytes[i..i + 3] != [0xFF, 0x00, 0x00] {
            continue;
        }
        let xy = bytes[i + 3];
        let (f, v, h) = (xy >> 6 & 1, xy >> 5 & 1, xy >> 4 & 1);
        let p = (v ^ h) << 3 | (f ^ h) << 2 | (f ^ v) << 1 | (f ^ v ^ h);
        if xy & 0x80 == 0 || xy & 0x0F != p || h == 1 {
            continue;
        }
        let v = v == 1;
        if last_v == Some(true) && !v {
            out.push(((i + 3) as u64, f == 1));
        }
        last_v = Some(v);
    }
    out
}

fn random_geometry(rng: &mut ChaCha8Rng) -> FrameGeometry {
    let lines_active_per_field = rng.gen_range(2..12);
    let interlaced = rng.gen_bool(0.7);
    let fields = if interlaced { 2 } else { 1 };
    let samples_active = 2 * rng.gen_range(2..40);
    FrameGeometry {
        lines_total: fields * (lines_active_per_field + rng.gen_range(2..6)),
        samples_total: samples_active + rng.gen_range(6..40) * 2,
        samples_active,
        lines_active_per_field,
        interlaced,
    }
}

fn random_stream(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let g = random_geometry(rng);
    g.validate().expect("generated geometry is valid");
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(1..5) {
        let data = (0..g.active_bytes_per_frame()).map(|_| rng.gen_range(1..=254)).collect();
        out.extend(encode_frame(&RawFrame::for_geometry(&g, data), &g).unwrap());
    }
    let skip = rng.gen_range(0..out.len() / 2);
    out.split_off(skip)
}

fn fsd_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut events = 0;
    let streaming = |b: &[u8]| detect_all(b).iter().map(|e| (e.byte_offset, e.f_bit)).collect::<Vec<_>>();
    for i in 0..200 {
        let mut s = random_stream(&mut rng);
        if i >= 100 {
            for _ in 0..rng.gen_range(1..20) {
                let at = rng.gen_range(0..s.len());
                s[at] = match rng.gen_range(0..4) {
                    0 => 0xFF,
                    1 => 0x00,
                    _ => rng.gen(),
                };
            }
        }
        let (a, b) = (streaming(&s), brute_force_starts(&s));
        ensure!(a == b, "stream {i}: streaming {a:?} vs brute force {b:?}");
        events += a.len();
    }
    for i in 0..100 {
        let n: usize = rng.gen_range(1_000..20_000);
        let noise: Vec<u8> = if i % 2 == 0 {
            (0..n).map(|_| rng.gen_range(0x00..0xFF)).collect()
        } else {
            // FF allowed, but never followed by 00 00.
            let mut v: Vec<u8> = (0..n).map(|_| rng.gen()).collect();
            for k in 0..n.saturating_sub(2) {
                if v[k..k + 3] == [0xFF, 0, 0] {
                    v[k + 2] = 1;
                }
            }
            v
        };
        ensure!(detect_all(&noise).is_empty(), "false event in code-free stream {i}");
    }
    Ok(format!("200 streams agree ({events} events), 100 code-free streams silent"))
}

// 8 ------------------------------------------------------------------------

fn codec_round_trip() -> Outcome {
    let g = FrameGeometry::desk();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..1000 {
        let data: Vec<u8> = (0..g.active_bytes_per_frame()).map(|_| rng.gen()).collect();
        let f = RawFrame::for_geometry(&g, data);
        let bytes = encode_frame(&f, &g).map_err(|e| e.to_string())?;
        for (o, &b) in bytes.iter().enumerate() {
            let loc = g.locate(o as u64);
            let in_code = matches!(loc.region, Region::Eav | Region::Sav);
            let prefix = loc.sample < 3 || (g.sav_start()..g.sav_start() + 3).contains(&loc.sample);
            if !prefix {
                ensure!(b != 0x00 && b != 0xFF, "frame {i}: reserved byte {b:#04x} at offset {o}");
            }
            if in_code && !prefix {
                ensure!(parse_xy(b).is_ok(), "frame {i}: bad XY at offset {o}");
            }
        }
        let out = decode_stream(&bytes);
        ensure!(out.warnings.is_empty(), "frame {i}: warnings {:?}", out.warnings);
        ensure!(out.frames.len() == 1 && out.frames[0].frame == f, "frame {i} did not round-trip");
    }
    Ok("1000 random desk frames round-trip, no reserved bytes outside code prefixes".into())
}

// 9 ------------------------------------------------------------------------

fn clock_measurement() -> Outcome {
    let sc = scenario(
        r#"{"schema":1,"geometry":"desk","frame_count":100,"sources":[
            {"clock":{"drift":{"kind":"constant","ppm":37.5}}},
            {"clock":{"drift":{"kind":"constant","ppm":-80}}},
            {"clock":{"drift":{"kind":"sinusoidal","ppm":100,"period_s":0.05,"phase":0.7}}},
            {"clock":{"drift":{"kind":"sinusoidal","ppm":25,"period_s":0.02}}}]}"#,
    );
    let t = Instant::now();
    let a = analyze_clocks(&sc).map_err(|e| e.to_string())?;
    let s = &a.sources;
    ensure!(a.window == 300, "window {}", a.window);
    for (row, want) in s[..2].iter().zip([37.5, -80.0]) {
        ensure!((row.mean_offset_ppm - want).abs() <= 1.0, "constant {want}: measured {}", row.mean_offset_ppm);
        ensure!((row.envelope_ppm).abs() <= 1.0, "constant {want}: spread {}", row.envelope_ppm);
    }
    for (row, want) in s[2..].iter().zip([100.0, 25.0]) {
        ensure!((row.envelope_ppm - want).abs() <= 2.0, "sinusoid {want}: envelope {}", row.envelope_ppm);
        ensure!(row.mean_offset_ppm.abs() <= 2.0 * want / 10.0 + 1.0, "sinusoid mean {}", row.mean_offset_ppm);
    }
    ensure!(t.elapsed() < Duration::from_secs(10), "took {:?}", t.elapsed());
    Ok(format!(
        "constant {:.3}/{:.3} ppm, envelopes {:.3}/{:.3} ppm",
        s[0].mean_offset_ppm, s[1].mean_offset_ppm, s[2].envelope_ppm, s[3].envelope_ppm
    ))
}

// 10 -----------------------------------------------------------------------

fn end_to_end_identity() -> Outcome {
    let mut detail = Vec::new();
    for (geometry, frames) in [("desk", 20u64), ("ntsc", 3)] {
        let mut sc = scenario(&format!(
            r#"{{"schema":1,"geometry":"{geometry}","frame_count":{frames},"operator":"passthrough",
                "sources":[{{"content":{{"kind":"gradient"}}}},{{"content":{{"kind":"noise"}}}}]}}"#
        ));
        sc.output.source_dumps = true;
        let run = run_resolved(&sc).map_err(|e| e.to_string())?;
        let r = &run.report;
        let b = sc.geometry.bytes_per_frame() as usize;
        let start = r.first_output_frame.ok_or("no output")? as usize;
        ensure!(r.output_frames == frames - 1, "{geometry}: {} output frames", r.output_frames);
        ensure!(run.output == run.source_dumps[0][start * b..], "{geometry}: output differs from reference input");
        detail.push(format!("{geometry} {} frames", r.output_frames));
    }
    Ok(format!("steady-state output byte-identical to reference ({})", detail.join(", ")))
}

// 11 -----------------------------------------------------------------------

fn determinism() -> Outcome {
    let json = r#"{"schema":1,"geometry":"desk","frame_count":40,"seed":99,"reference":{"policy":"slowest_clock"},
        "operator":"luma_max","output":{"trace_every":7,"source_dumps":true},
        "sources":[{"clock":{"drift":{"kind":"random_walk","ppm":100,"step_ppm":30},"startup_delay_ns":123457}},
                   {"clock":{"drift":{"kind":"sinusoidal","ppm":80,"period_s":0.01}},"content":{"kind":"noise"}},
                   {"clock":{"drift":{"kind":"constant","ppm":-55}}},
                   {"clock":{"startup_delay_ns":999999}}]}"#;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = Vec::new();
    for d in &dirs {
        let sc = scenario(json);
        let run = run_resolved(&sc).map_err(|e| e.to_string())?;
        let written = write_artifacts(&run, &sc, d.path()).map_err(|e| e.to_string())?;
        let contents: Vec<(String, Vec<u8>)> = written
            .iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect();
        files.push(contents);
    }
    ensure!(files[0].len() == files[1].len(), "different artifact sets");
    for ((na, a), (nb, b)) in files[0].iter().zip(&files[1]) {
        ensure!(na == nb && a == b, "{na} differs between runs");
    }
    let names: Vec<&str> = files[0].iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("identical {}", names.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("frame size", frame_size),
        ("power tables", power_tables),
        ("LDO sizing", ldo_sizing),
        ("spatial alignment", spatial_alignment),
        ("full-geometry run", full_geometry_run),
        ("temporal offset bound", temporal_offset_bound),
        ("FSD oracle equivalence", fsd_equivalence),
        ("codec round trip", codec_round_trip),
        ("clock measurement", clock_measurement),
        ("end-to-end identity", end_to_end_identity),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
