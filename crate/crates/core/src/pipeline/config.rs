use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::content::ContentSpec;
use super::operator::{OperatorKind, PixelOperator};
use super::PipelineError;
use crate::bt656::FrameGeometry;
use crate::clocks::{ClockModel, DriftProfile, Frequency, DEFAULT_STEP_EDGES};
use crate::sync::{ReferencePolicy, DEFAULT_FILL_BYTE};

pub const SCHEMA_VERSION: u32 = 1;

/// A scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default)]
    pub geometry: GeometrySpec,
    pub frame_count: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reference: ReferencePolicy,
    #[serde(default)]
    pub operator: OperatorKind,
    #[serde(default = "default_fill")]
    pub fill_byte: u8,
    /// Also emit output frames read before every channel was primed.
    #[serde(default)]
    pub include_priming: bool,
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_fill() -> u8 {
    DEFAULT_FILL_BYTE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    Named(String),
    Custom(FrameGeometry),
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec::Named("ntsc".into())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default)]
    pub clock: ClockSpec,
    #[serde(default)]
    pub content: ContentSpec,
    /// Recorded `.656` stream replayed instead of synthetic content.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencySpec {
    Number(f64),
    Text(String),
}

impl FrequencySpec {
    fn parse(&self) -> Option<Frequency> {
        match self {
            FrequencySpec::Number(v) if v.is_finite() && *v > 0.0 => Frequency::parse_decimal(&v.to_string()),
            FrequencySpec::Number(_) => None,
            FrequencySpec::Text(s) => Frequency::parse_decimal(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSpec {
    #[serde(default = "default_nominal")]
    pub nominal_hz: FrequencySpec,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub startup_delay_ns: u64,
    /// Edges per drift step; defaults to one frame for random walks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_edges: Option<u64>,
}

fn default_nominal() -> FrequencySpec {
    FrequencySpec::Number(27e6)
}

impl Default for ClockSpec {
    fn default() -> Self {
        ClockSpec {
            nominal_hz: default_nominal(),
            drift: DriftSpec::default(),
            startup_delay_ns: 0,
            step_edges: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    #[default]
    None,
    Constant,
    Sinusoidal,
    RandomWalk,
}

/// Drift keys. `ppm` is the offset (constant), amplitude (sinusoidal) or
/// bound (random walk).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    #[serde(default)]
    pub kind: DriftKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ppm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File names inside the output directory; `null` skips the artifact.
    #[serde(default = "default_dump")]
    pub dump: Option<String>,
    #[serde(default = "default_report")]
    pub report: Option<String>,
    #[serde(default = "default_trace")]
    pub trace: Option<String>,
    /// Keep a trace row for every N-th active read tick.
    #[serde(default = "default_trace_every")]
    pub trace_every: u64,
    /// Also write each source's input stream as `source<N>.656`.
    #[serde(default)]
    pub source_dumps: bool,
    /// Also write the first output frame as PPM and PGM.
    #[serde(default)]
    pub image: bool,
}

fn default_dump() -> Option<String> {
    Some("output.656".into())
}

fn default_report() -> Option<String> {
    Some("report.json".into())
}

fn default_trace() -> Option<String> {
    Some("trace.csv".into())
}

fn default_trace_every() -> u64 {
    100
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dump: default_dump(),
            report: default_report(),
            trace: default_trace(),
            trace_every: default_trace_every(),
            source_dumps: false,
            image: false,
        }
    }
}

/// Per-source seed fanned out from the scenario seed.
pub fn derive_seed(seed: u64, source: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(source as u64 + 1);
    rng.next_u64()
}

/// A source ready to run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedSource {
    pub clock: ClockModel,
    pub drift: DriftSpec,
    pub content: ContentSpec,
    pub seed: u64,
    pub input: Option<Vec<u8>>,
}

/// A validated scenario with inputs loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub geometry: FrameGeometry,
    pub frame_count: u64,
    pub seed: u64,
    pub reference: ReferencePolicy,
    pub operator: PixelOperator,
    pub fill_byte: u8,
    pub include_priming: bool,
    pub sources: Vec<ResolvedSource>,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<ScenarioConfig, PipelineError> {
        serde_json::from_str(text).map_err(PipelineError::Json)
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        ScenarioConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn geometry(&self) -> Result<FrameGeometry, PipelineError> {
        let g = match &self.geometry {
            GeometrySpec::Named(name) => FrameGeometry::by_name(name)
                .ok_or_else(|| PipelineError::config("geometry", format!("unknown geometry {name:?}")))?,
            GeometrySpec::Custom(g) => *g,
        };
        g.validate()
            .map_err(|e| PipelineError::config("geometry", e.to_string()))?;
        Ok(g)
    }

    /// Validates and loads input dumps; relative paths resolve against
    /// `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scenario, PipelineError> {
        if self.schema != SCHEMA_VERSION {
            return Err(PipelineError::config(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        let geometry = self.geometry()?;
        if self.frame_count == 0 {
            return Err(PipelineError::config("frame_count", "must be at least 1".into()));
        }
        if self.frame_count > u32::MAX as u64 {
            return Err(PipelineError::config("frame_count", "too large".into()));
        }
        if self.sources.is_empty() {
            return Err(PipelineError::config("sources", "at least one source is required".into()));
        }
        if self.sources.len() > u16::MAX as usize {
            return Err(PipelineError::config("sources", "too many sources".into()));
        }
        if let ReferencePolicy::Fixed { index } = self.reference {
            if index >= self.sources.len() {
                return Err(PipelineError::config(
                    "reference.index",
                    format!("{index} out of range for {} sources", self.sources.len()),
                ));
            }
        }
        let operator = PixelOperator::new(self.operator, self.sources.len())?;
        let sources = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| resolve_source(i, s, &geometry, self.seed, base_dir))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario {
            geometry,
            frame_count: self.frame_count,
            seed: self.seed,
            reference: self.reference,
            operator,
            fill_byte: self.fill_byte,
            include_priming: self.include_priming,
            sources,
            output: self.output.clone(),
        })
    }
}

fn resolve_source(
    i: usize,
    s: &SourceConfig,
    geometry: &FrameGeometry,
    scenario_seed: u64,
    base_dir: Option<&Path>,
) -> Result<ResolvedSource, PipelineError> {
    let field = |f: &str| format!("sources[{i}].{f}");
    let missing = |f: &str| PipelineError::config(&field(f), "required for this drift kind".into());
    let seed = derive_seed(scenario_seed, i);
    let c = &s.clock;
    let nominal = c
        .nominal_hz
        .parse()
        .ok_or_else(|| PipelineError::config(&field("clock.nominal_hz"), "not a positive decimal".into()))?;
    let d = &c.drift;
    let drift = match d.kind {
        DriftKind::None => DriftProfile::None,
        DriftKind::Constant => DriftProfile::ConstantPpm(d.ppm.ok_or_else(|| missing("clock.drift.ppm"))?),
        DriftKind::Sinusoidal => DriftProfile::SinusoidalPpm {
            amplitude_ppm: d.ppm.ok_or_else(|| missing("clock.drift.ppm"))?,
            period_s: d.period_s.ok_or_else(|| missing("clock.drift.period_s"))?,
            phase: d.phase.unwrap_or(0.0),
        },
        DriftKind::RandomWalk => DriftProfile::RandomWalkPpm {
            step_ppm: d.step_ppm.ok_or_else(|| missing("clock.drift.step_ppm"))?,
            bound_ppm: d.ppm.ok_or_else(|| missing("clock.drift.ppm"))?,
            seed: d.seed.unwrap_or(seed),
        },
    };
    let step_edges = c.step_edges.unwrap_or(match d.kind {
        DriftKind::RandomWalk => geometry.bytes_per_frame(),
        _ => DEFAULT_STEP_EDGES,
    });
    let clock = ClockModel::new(nominal, drift, c.startup_delay_ns).with_step_edges(step_edges);
    clock
        .validate()
        .map_err(|e| PipelineError::config(&field("clock"), e.to_string()))?;
    let input = match &s.input {
        None => None,
        Some(p) => {
            let path = match base_dir {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.clone(),
            };
            let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
            Some(bytes)
        }
    };
    Ok(ResolvedSource {
        clock,
        drift: d.clone(),
        content: s.content,
        seed,
        input,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"schema":1,"geometry":"desk","frame_count":3,"sources":[{},{}]}"#;

    #[test]
    fn minimal_config_defaults() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        let sc = cfg.resolve(None).unwrap();
        assert_eq!(sc.geometry, FrameGeometry::desk());
        assert_eq!(sc.sources.len(), 2);
        assert_eq!(sc.sources[0].clock, ClockModel::ideal_27mhz());
        assert_eq!(sc.fill_byte, 0x10);
        assert_eq!(sc.operator.name(), "passthrough");
        assert_ne!(sc.sources[0].seed, sc.sources[1].seed);
    }

    #[test]
    fn config_round_trips() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"seed\"", "\"sead\"").replace("\"frame_count\"", "\"frames\"");
        assert!(ScenarioConfig::from_json(&bad).is_err());
        let bad = r#"{"schema":1,"frame_count":1,"sources":[{"clock":{"nominal":27e6}}]}"#;
        assert!(ScenarioConfig::from_json(bad).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let field_of = |json: &str| match ScenarioConfig::from_json(json).unwrap().resolve(None) {
            Err(PipelineError::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field_of(r#"{"schema":1,"frame_count":1,"sources":[]}"#), "sources");
        assert_eq!(field_of(r#"{"schema":2,"frame_count":1,"sources":[{}]}"#), "schema");
        assert_eq!(field_of(r#"{"schema":1,"frame_count":0,"sources":[{}]}"#), "frame_count");
        assert_eq!(
            field_of(r#"{"schema":1,"frame_count":1,"sources":[{"clock":{"drift":{"kind":"sinusoidal","ppm":10}}}]}"#),
            "sources[0].clock.drift.period_s"
        );
        assert_eq!(
            field_of(r#"{"schema":1,"frame_count":1,"reference":{"policy":"fixed","index":3},"sources":[{}]}"#),
            "reference.index"
        );
        assert_eq!(field_of(r#"{"schema":1,"geometry":"pal","frame_count":1,"sources":[{}]}"#), "geometry");
    }

    #[test]
    fn drift_and_seeds() {
        let json = r#"{"schema":1,"geometry":"desk","frame_count":1,"seed":7,"sources":[
            {"clock":{"nominal_hz":"27000000","drift":{"kind":"random_walk","ppm":100,"step_ppm":5}}},
            {"clock":{"drift":{"kind":"random_walk","ppm":100,"step_ppm":5,"seed":11}}}]}"#;
        let sc = ScenarioConfig::from_json(json).unwrap().resolve(None).unwrap();
        let DriftProfile::RandomWalkPpm { seed, .. } = sc.sources[0].clock.drift else { panic!() };
        assert_eq!(seed, derive_seed(7, 0));
        let DriftProfile::RandomWalkPpm { seed, .. } = sc.sources[1].clock.drift else { panic!() };
        assert_eq!(seed, 11);
        assert_eq!(sc.sources[0].clock.step_edges, 20_480);
        assert_eq!(derive_seed(7, 0), derive_seed(7, 0));
    }

    #[test]
    fn missing_input_is_io_error() {
        let json = r#"{"schema":1,"frame_count":1,"sources":[{"input":"does/not/exist.656"}]}"#;
        let err = ScenarioConfig::from_json(json).unwrap().resolve(None).unwrap_err();
        assert!(matches!(err, PipelineError::Io { .. }));
    }
}
