//! Scenario files: TOML with one table per stage of the experiment, plus
//! `--set section.key=value` overrides.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source_name, l, self.message),
            None => write!(f, "{}: {}", self.source_name, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Flux {
    /// Photons per window at the reference resolution bandwidth.
    Photons(f64),
    Solve,
}

impl<'de> Deserialize<'de> for Flux {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Float(v) => Ok(Flux::Photons(v)),
            Value::Integer(v) => Ok(Flux::Photons(v as f64)),
            Value::String(s) if s == "solve" => Ok(Flux::Solve),
            other => Err(serde::de::Error::custom(format!(
                "flux_N must be a photon number or \"solve\", got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainModel {
    /// One effective efficiency for the whole chain and an ideal detector.
    Fitted,
    /// Beamsplitter reflectivity, quantum efficiency and dead zone applied separately.
    Components,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inject {
    None,
    NegativeMaskWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Beam {
    pub w0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half width of the grid in units of `w0`.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_points")]
    pub n_points: usize,
}

fn default_half_width() -> f64 {
    6.0
}

fn default_points() -> usize {
    4096
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: default_half_width(),
            n_points: default_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub squeezing_db: f64,
    #[serde(default)]
    pub relative_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chain {
    pub model: ChainModel,
    pub efficiency: f64,
    #[serde(rename = "beamsplitter_R")]
    pub beamsplitter_r: f64,
    pub quantum_efficiency: f64,
    #[serde(default = "one")]
    pub mode_match_visibility: f64,
    #[serde(default = "full_range")]
    pub visibility_range: [f64; 2],
}

fn one() -> f64 {
    1.0
}

fn full_range() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detector {
    pub dead_zone: f64,
    pub pixel_width: f64,
    #[serde(default)]
    pub split_position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signal {
    pub displacement_amplitude: f64,
    pub frequency: f64,
    pub rbw: f64,
    pub span: f64,
    #[serde(default = "default_averages")]
    pub averages: usize,
    #[serde(default = "default_bins")]
    pub points: usize,
    /// Sweep time of the zero-span noise traces.
    #[serde(default = "default_sweep")]
    pub sweep_time: f64,
}

fn default_averages() -> usize {
    10
}

fn default_bins() -> usize {
    401
}

fn default_sweep() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    #[serde(rename = "flux_N")]
    pub flux_n: Flux,
    pub snr_coherent: f64,
    pub reference_displacement: f64,
    pub reference_rbw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqlSweep {
    pub n_values: Vec<f64>,
    pub w0_values: Vec<f64>,
}

impl Default for SqlSweep {
    fn default() -> Self {
        Self {
            n_values: vec![1e3, 1e6, 1e9, 1e12, 1e15],
            w0_values: vec![1e-6, 1e-5, 1e-4, 5e-4, 1e-3],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
    #[serde(default = "default_random")]
    pub random_scenarios: usize,
    #[serde(default = "default_inject")]
    pub inject: Inject,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_cutoff() -> usize {
    30
}

fn default_random() -> usize {
    10
}

fn default_inject() -> Inject {
    Inject::None
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            mc_samples: default_samples(),
            fock_cutoff: default_cutoff(),
            random_scenarios: default_random(),
            inject: default_inject(),
        }
    }
}

/// Published measurements printed next to the predictions. A value and its
/// uncertainty; every entry is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measured {
    pub db_sum: Option<[f64; 2]>,
    pub db_diff: Option<[f64; 2]>,
    pub db_half: Option<[f64; 2]>,
    pub snr_coherent: Option<[f64; 2]>,
    pub snr_squeezed: Option<[f64; 2]>,
    pub improvement: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub beam: Beam,
    #[serde(default)]
    pub grid: GridConfig,
    pub source: Source,
    pub chain: Chain,
    pub detector: Detector,
    pub signal: Signal,
    pub operating_point: OperatingPoint,
    #[serde(default)]
    pub sql: SqlSweep,
    #[serde(default)]
    pub run: Run,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub measured: Measured,
}

/// First line (1-based) of `key = ...` inside `[section]`.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Applies `section.key=value`; the value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), String> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override `{assignment}` is not of the form key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(format!("override key `{path}` is malformed"));
    }
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    };
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut node = table;
    for k in parents {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = match entry {
            Value::Table(t) => t,
            _ => return Err(format!("override `{path}`: `{k}` is not a table")),
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn check(ok: bool, section: &str, key: &str, msg: String, errs: &mut Vec<(String, String, String)>) {
    if !ok {
        errs.push((section.into(), key.into(), msg));
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            line: None,
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&text, &name, overrides)
    }

    pub fn parse(text: &str, source_name: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let err = |line, message| ConfigError {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| err(e.span().map(|s| line_of_offset(text, s.start)), e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o).map_err(|m| err(None, m))?;
        }
        let cfg: ScenarioConfig = Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            let message = e.message().to_string();
            err(guess_line(text, &message), message)
        })?;
        cfg.validate().map_err(|(section, key, message)| {
            err(locate(text, &section, &key), format!("{section}.{key}: {message}"))
        })?;
        Ok(cfg)
    }

    /// First violated constraint as `(section, key, message)`.
    pub fn validate(&self) -> Result<(), (String, String, String)> {
        let mut e = Vec::new();
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        check(pos(self.beam.w0), "beam", "w0", format!("must be positive, got {}", self.beam.w0), &mut e);
        check(
            self.grid.half_width >= 4.0 && self.grid.half_width.is_finite(),
            "grid",
            "half_width",
            format!("must be at least 4 beam radii, got {}", self.grid.half_width),
            &mut e,
        );
        check(
            (64..=1 << 20).contains(&self.grid.n_points),
            "grid",
            "n_points",
            format!("must lie in [64, 2^20], got {}", self.grid.n_points),
            &mut e,
        );
        check(
            self.source.squeezing_db >= 0.0 && self.source.squeezing_db <= 20.0,
            "source",
            "squeezing_db",
            format!("must lie in [0, 20] dB, got {}", self.source.squeezing_db),
            &mut e,
        );
        check(self.source.relative_phase.is_finite(), "source", "relative_phase", "must be finite".into(), &mut e);
        for (key, v) in [
            ("efficiency", self.chain.efficiency),
            ("beamsplitter_R", self.chain.beamsplitter_r),
            ("quantum_efficiency", self.chain.quantum_efficiency),
            ("mode_match_visibility", self.chain.mode_match_visibility),
        ] {
            check(unit(v), "chain", key, format!("must lie in [0, 1], got {v}"), &mut e);
        }
        let [vlo, vhi] = self.chain.visibility_range;
        check(
            unit(vlo) && unit(vhi) && vlo <= vhi,
            "chain",
            "visibility_range",
            format!("must be an ordered pair in [0, 1], got [{vlo}, {vhi}]"),
            &mut e,
        );
        check(
            self.detector.dead_zone >= 0.0 && self.detector.dead_zone.is_finite(),
            "detector",
            "dead_zone",
            format!("must be non-negative, got {}", self.detector.dead_zone),
            &mut e,
        );
        check(pos(self.detector.pixel_width), "detector", "pixel_width", format!("must be positive, got {}", self.detector.pixel_width), &mut e);
        check(self.detector.split_position.is_finite(), "detector", "split_position", "must be finite".into(), &mut e);
        check(
            self.signal.displacement_amplitude >= 0.0 && self.signal.displacement_amplitude.is_finite(),
            "signal",
            "displacement_amplitude",
            format!("must be non-negative, got {}", self.signal.displacement_amplitude),
            &mut e,
        );
        check(pos(self.signal.frequency), "signal", "frequency", format!("must be positive, got {}", self.signal.frequency), &mut e);
        check(pos(self.signal.rbw), "signal", "rbw", format!("must be positive, got {}", self.signal.rbw), &mut e);
        check(
            self.signal.span > self.signal.rbw && self.signal.span.is_finite(),
            "signal",
            "span",
            format!("must exceed the rbw, got {}", self.signal.span),
            &mut e,
        );
        check(
            (1..=10_000).contains(&self.signal.averages),
            "signal",
            "averages",
            format!("must lie in [1, 10000], got {}", self.signal.averages),
            &mut e,
        );
        check(
            (3..=1_000_000).contains(&self.signal.points),
            "signal",
            "points",
            format!("must lie in [3, 10^6], got {}", self.signal.points),
            &mut e,
        );
        check(pos(self.signal.sweep_time), "signal", "sweep_time", format!("must be positive, got {}", self.signal.sweep_time), &mut e);
        if let Flux::Photons(n) = self.operating_point.flux_n {
            check(pos(n), "operating_point", "flux_N", format!("must be positive, got {n}"), &mut e);
        }
        check(
            self.operating_point.snr_coherent.is_finite(),
            "operating_point",
            "snr_coherent",
            "must be finite".into(),
            &mut e,
        );
        check(
            self.operating_point.reference_displacement.is_finite(),
            "operating_point",
            "reference_displacement",
            "must be finite".into(),
            &mut e,
        );
        check(
            pos(self.operating_point.reference_rbw),
            "operating_point",
            "reference_rbw",
            format!("must be positive, got {}", self.operating_point.reference_rbw),
            &mut e,
        );
        check(
            !self.sql.n_values.is_empty() && self.sql.n_values.iter().all(|&v| pos(v)),
            "sql",
            "n_values",
            "must be a non-empty list of positive numbers".into(),
            &mut e,
        );
        check(
            !self.sql.w0_values.is_empty() && self.sql.w0_values.iter().all(|&v| pos(v)),
            "sql",
            "w0_values",
            "must be a non-empty list of positive numbers".into(),
            &mut e,
        );
        check(
            (10_000..=100_000_000).contains(&self.validate.mc_samples),
            "validate",
            "mc_samples",
            format!("must lie in [10^4, 10^8], got {}", self.validate.mc_samples),
            &mut e,
        );
        check(
            (10..=200).contains(&self.validate.fock_cutoff),
            "validate",
            "fock_cutoff",
            format!("must lie in [10, 200], got {}", self.validate.fock_cutoff),
            &mut e,
        );
        check(
            self.validate.random_scenarios <= 1000,
            "validate",
            "random_scenarios",
            format!("must be at most 1000, got {}", self.validate.random_scenarios),
            &mut e,
        );
        match e.into_iter().next() {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }
}

/// Best-effort line for a deserialization message naming a key in backticks.
fn guess_line(text: &str, message: &str) -> Option<usize> {
    let key = message.split('`').nth(1)?;
    text.lines()
        .position(|l| {
            let t = l.trim();
            t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('=')) || t == format!("[{key}]")
        })
        .map(|i| i + 1)
}
