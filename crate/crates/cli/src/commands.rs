use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mvsync_core::bt656::image::{write_pgm, write_ppm};
use mvsync_core::bt656::FrameGeometry;
use mvsync_core::pipeline::{
    analyze_clocks, compare_dumps, interface_decode, run_resolved, write_artifacts, write_atomic, GeometrySpec,
    Scenario, ScenarioConfig,
};
use mvsync_core::power::{case_study, total_power, PowerBudget};
use mvsync_core::sync::{check_rows, read_trace_csv};
use serde_json::json;

use crate::{Cli, CliError, Command, Format, Outcome};

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::AnalyzeClocks => analyze(cli),
        Command::Inspect { dump, image, frame } => inspect(cli, dump, image.as_deref(), *frame),
        Command::Verify { trace: Some(t), dump } if dump.is_empty() => verify_trace(cli, t),
        Command::Verify { trace: None, dump } if dump.len() == 2 => verify_dumps(cli, &dump[0], &dump[1]),
        Command::Verify { .. } => Err(CliError::Usage("verify needs --trace PATH or --dump A --dump B".into())),
        Command::Power => power(cli),
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| io_error(path, e))
}

fn stdout_error(e: io::Error) -> CliError {
    CliError::Io(format!("stdout: {e}"))
}

/// Loads the scenario named by --config and applies the flag overrides.
fn load_scenario(cli: &Cli) -> Result<Scenario, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let mut config = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(g) = cli.geometry {
        config.geometry = GeometrySpec::Named(g.name().into());
    }
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    Ok(config.resolve(Some(base.unwrap_or(Path::new("."))))?)
}

fn csv_out(rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    }
    w.flush().map_err(stdout_error)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    writeln!(out).map_err(stdout_error)
}

fn simulate(cli: &Cli) -> Result<Outcome, CliError> {
    let scenario = load_scenario(cli)?;
    let started = Instant::now();
    let run = run_resolved(&scenario)?;
    let written = write_artifacts(&run, &scenario, &cli.out)?;
    let r = &run.report;
    match cli.format {
        Some(Format::Json) => print!("{}", r.to_json()),
        Some(Format::Csv) => csv_out([
            [
                "frame_count",
                "channels",
                "reference_channel",
                "output_frames",
                "priming_frames",
                "checked_ticks",
                "violations",
                "event_count",
            ]
            .map(String::from)
            .to_vec(),
            [
                r.frame_count,
                r.channels as u64,
                r.reference_channel as u64,
                r.output_frames,
                r.priming_frames,
                r.checked_ticks,
                r.violations,
                r.event_count,
            ]
            .map(|v| v.to_string())
            .to_vec(),
        ])?,
        None => {
            println!(
                "{} frames, {} channels, reference {}: {} output frames ({} priming), {} violations in {} checked ticks",
                r.frame_count,
                r.channels,
                r.reference_channel,
                r.output_frames,
                r.priming_frames,
                r.violations,
                r.checked_ticks
            );
            for off in r.temporal_offsets.iter().filter(|o| o.channel != r.reference_channel) {
                println!(
                    "  channel {}: temporal offset {}..{} frames (mode {})",
                    off.channel, off.min, off.max, off.mode
                );
            }
            for p in &written {
                println!("  wrote {}", p.display());
            }
        }
    }
    eprintln!(
        "simulated {} byte events in {:.2} s",
        r.event_count,
        started.elapsed().as_secs_f64()
    );
    Ok(if r.violations > 0 { Outcome::Violations } else { Outcome::Clean })
}

fn analyze(cli: &Cli) -> Result<Outcome, CliError> {
    let scenario = load_scenario(cli)?;
    let a = analyze_clocks(&scenario)?;
    match cli.format {
        Some(Format::Json) => print_json(&a)?,
        Some(Format::Csv) => {
            let head = [
                "source",
                "nominal_hz",
                "min_hz",
                "mean_hz",
                "max_hz",
                "mean_offset_ppm",
                "envelope_ppm",
                "first_frame_start_ns",
            ];
            let rows = a.sources.iter().map(|s| {
                vec![
                    s.id.to_string(),
                    s.nominal_hz.to_string(),
                    s.stats.min_hz.to_string(),
                    s.stats.mean_hz.to_string(),
                    s.stats.max_hz.to_string(),
                    s.mean_offset_ppm.to_string(),
                    s.envelope_ppm.to_string(),
                    s.first_frame_start_ns.map(|t| t.to_string()).unwrap_or_default(),
                ]
            });
            csv_out(std::iter::once(head.map(String::from).to_vec()).chain(rows))?;
        }
        None => {
            println!("{}-edge windows", a.window);
            println!(
                "{:>6} {:>16} {:>16} {:>16} {:>10} {:>10}",
                "source", "min Hz", "mean Hz", "max Hz", "mean ppm", "+/- ppm"
            );
            for s in &a.sources {
                println!(
                    "{:>6} {:>16.3} {:>16.3} {:>16.3} {:>10.3} {:>10.3}",
                    s.id, s.stats.min_hz, s.stats.mean_hz, s.stats.max_hz, s.mean_offset_ppm, s.envelope_ppm
                );
            }
            for d in &a.startup_deltas {
                println!("startup delta {} -> {}: {:.3} ns", d.from, d.to, d.delta_ns);
            }
        }
    }
    Ok(Outcome::Clean)
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn inspect(cli: &Cli, dump: &Path, image: Option<&Path>, frame: usize) -> Result<Outcome, CliError> {
    let bytes = read_file(dump)?;
    let geometry = cli.geometry.map_or(FrameGeometry::ntsc(), |g| FrameGeometry::by_name(g.name()).unwrap());
    let out = interface_decode(&bytes, &geometry);
    let complete = out.pictures.iter().filter(|p| p.complete).count();
    match cli.format {
        Some(Format::Json) => print_json(&json!({
            "frames": out.pictures.len(),
            "complete_frames": complete,
            "codes": out.codes,
            "warnings": out.warnings.iter().map(|w| json!({"offset": w.offset, "error": w.error.to_string()})).collect::<Vec<_>>(),
        }))?,
        Some(Format::Csv) => csv_out([
            ["frames", "complete_frames", "codes", "warnings"].map(String::from).to_vec(),
            [out.pictures.len(), complete, out.codes as usize, out.warnings.len()]
                .map(|v| v.to_string())
                .to_vec(),
        ])?,
        None => {
            println!(
                "{}, {}, {}",
                plural(out.pictures.len(), "frame"),
                plural(out.codes as usize, "code"),
                plural(out.warnings.len(), "warning")
            );
            for w in &out.warnings {
                println!("  offset {}: {}", w.offset, w.error);
            }
            if complete < out.pictures.len() {
                println!("  {} incomplete", plural(out.pictures.len() - complete, "frame"));
            }
        }
    }
    if let Some(path) = image {
        let picture = out
            .pictures
            .get(frame)
            .ok_or_else(|| CliError::Usage(format!("--frame {frame}: dump has {}", plural(out.pictures.len(), "frame"))))?;
        let mut buf = Vec::new();
        let gray = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if gray {
            write_pgm(&picture.frame, &mut buf)
        } else {
            write_ppm(&picture.frame, &mut buf)
        }
        .map_err(|e| io_error(path, e))?;
        write_atomic(path, &buf)?;
    }
    Ok(Outcome::Clean)
}

fn verify_trace(cli: &Cli, path: &PathBuf) -> Result<Outcome, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let parsed = read_trace_csv(BufReader::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let check = check_rows(&parsed.rows);
    match cli.format {
        Some(Format::Json) => print_json(&check)?,
        Some(Format::Csv) => csv_out(
            std::iter::once(["row", "tick_time_ns", "channels"].map(String::from).to_vec()).chain(
                check.violations.iter().map(|v| {
                    let chans: Vec<String> = v.channels.iter().map(|c| c.to_string()).collect();
                    vec![v.row.to_string(), format!("{:.3}", v.tick_time_ns), chans.join(" ")]
                }),
            ),
        )?,
        None => {
            println!(
                "{} rows, {} checked, {}",
                check.rows,
                check.checked,
                plural(check.violations.len(), "violation")
            );
            for v in &check.violations {
                println!("  row {} at {:.3} ns: channels {:?} misaligned", v.row, v.tick_time_ns, v.channels);
            }
            if check.flag_mismatches > 0 {
                println!("  {} rows disagree with their violation flag", check.flag_mismatches);
            }
        }
    }
    Ok(if check.violations.is_empty() { Outcome::Clean } else { Outcome::Violations })
}

fn verify_dumps(cli: &Cli, a: &Path, b: &Path) -> Result<Outcome, CliError> {
    let c = compare_dumps(&read_file(a)?, &read_file(b)?);
    match cli.format {
        Some(Format::Json) => print_json(&c)?,
        Some(Format::Csv) => csv_out([
            ["len_a", "len_b", "violations", "first_violation", "differing_bytes"].map(String::from).to_vec(),
            vec![
                c.len_a.to_string(),
                c.len_b.to_string(),
                c.violations.to_string(),
                c.first_violation.map(|o| o.to_string()).unwrap_or_default(),
                c.differing_bytes.to_string(),
            ],
        ])?,
        None => {
            println!("{} vs {} bytes, {}", c.len_a, c.len_b, plural(c.violations as usize, "violation"));
            if let Some(o) = c.first_violation {
                println!("  first at offset {o}");
            }
            println!("  {} differing bytes", c.differing_bytes);
        }
    }
    Ok(if c.aligned() { Outcome::Clean } else { Outcome::Violations })
}

fn power(cli: &Cli) -> Result<Outcome, CliError> {
    let (totals, report) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let budget: PowerBudget = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            (None, budget.report()?)
        }
        None => {
            let cs = case_study();
            (
                Some((total_power(&cs.device_power), total_power(&cs.supply_power))),
                cs.sizing.report()?,
            )
        }
    };
    match cli.format {
        Some(Format::Json) => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            if let Some((devices, supplies)) = totals {
                v["device_power_total_mw"] = json!(devices);
                v["supply_power_total_mw"] = json!(supplies);
            }
            print_json(&v)?;
        }
        Some(Format::Csv) => {
            let head = ["ldo", "max_output_current_ma", "device", "per_device_ma", "devices_per_ldo"];
            let rows = report.ldos.iter().flat_map(|l| {
                l.capacity.iter().map(move |c| {
                    vec![
                        l.ldo.clone(),
                        l.max_output_current_ma.to_string(),
                        c.device.clone(),
                        c.per_device_ma.to_string(),
                        c.devices_per_ldo.to_string(),
                    ]
                })
            });
            csv_out(std::iter::once(head.map(String::from).to_vec()).chain(rows))?;
        }
        None => {
            if let Some((devices, supplies)) = totals {
                println!("device power total: {devices} mW");
                println!("supply power total: {supplies} mW");
                println!("LDO sizing:");
            }
            print!("{report}");
        }
    }
    Ok(Outcome::Clean)
}
