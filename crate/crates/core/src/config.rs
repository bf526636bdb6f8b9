//! Run configuration: a flat key-value file (TOML, or JSON by extension)
//! with `key=value` overrides layered on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::click::DetectorModel;
use crate::illumination::{ErrorMode, ProbeKind, Scenario};
use crate::sequential::{GroundTruth, ShotCounting, TrajectoryConfig, DEFAULT_THRESHOLD};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn one() -> f64 {
    1.0
}
fn default_probe() -> ProbeKind {
    ProbeKind::Tmsv
}
fn default_nbar_min() -> f64 {
    0.01
}
fn default_nbar_max() -> f64 {
    5.0
}
fn default_points() -> usize {
    51
}
fn default_x_min() -> f64 {
    -3.0
}
fn default_x_max() -> f64 {
    3.0
}
fn default_x_points() -> usize {
    121
}
fn default_shots() -> usize {
    1000
}
fn default_trials() -> usize {
    100
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_ground_truth() -> GroundTruth {
    GroundTruth::Present
}
fn default_probes() -> Vec<ProbeKind> {
    ProbeKind::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: f64,
    pub nbar_b: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default)]
    pub nbar_d: f64,
    /// Idler efficiency; defaults to `eta`.
    #[serde(default)]
    pub eta_i: Option<f64>,
    #[serde(default)]
    pub nbar_d_i: f64,
    #[serde(default = "one")]
    pub nbar: f64,
    #[serde(default = "default_probe")]
    pub probe_kind: ProbeKind,
    #[serde(default)]
    pub intercept_eta: Option<f64>,
    #[serde(default)]
    pub error_mode: ErrorMode,

    #[serde(default = "default_nbar_min")]
    pub nbar_min: f64,
    #[serde(default = "default_nbar_max")]
    pub nbar_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default)]
    pub bounds: bool,

    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    /// Idler efficiencies for the Wigner slices; empty means `[eta_i]`.
    #[serde(default)]
    pub eta_i_values: Vec<f64>,

    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_ground_truth")]
    pub ground_truth: GroundTruth,
    #[serde(default)]
    pub shot_counting: ShotCounting,
    #[serde(default)]
    pub record_stride: Option<usize>,
    #[serde(default)]
    pub trace_trials: Vec<usize>,
    /// Probe kinds run side by side on shared random streams.
    #[serde(default = "default_probes")]
    pub probes: Vec<ProbeKind>,
    #[serde(default)]
    pub per_trial: bool,

    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub oracle_dim: Option<usize>,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parses a file into a flat key map; `.json` files are JSON, anything else
/// TOML.
pub fn read_table(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_table(&text, is_json).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
}

pub fn parse_table(text: &str, json: bool) -> Result<Map<String, Value>, ConfigError> {
    let value = if json {
        serde_json::from_str::<Value>(text).map_err(|e| ConfigError(e.to_string()))?
    } else {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| ConfigError(e.to_string()))?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => err("config must be a table of keys"),
    }
}

/// Parses a `key=value` override; the value is read as a TOML literal and
/// falls back to a bare string.
pub fn parse_override(spec: &str) -> Result<(String, Value), ConfigError> {
    let Some((key, raw)) = spec.split_once('=') else {
        return err(format!("override `{spec}` is not key=value"));
    };
    let key = key.trim();
    if key.is_empty() {
        return err(format!("override `{spec}` has an empty key"));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("parsed key")).map_err(|e| ConfigError(e.to_string()))?,
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

impl RunConfig {
    pub fn from_table(table: Map<String, Value>) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_value(Value::Object(table)).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_str(text: &str, json: bool) -> Result<Self, ConfigError> {
        Self::from_table(parse_table(text, json)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_table(read_table(path)?)
    }

    pub fn eta_i(&self) -> f64 {
        self.eta_i.unwrap_or(self.eta)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let map = |e: crate::Error| ConfigError(e.to_string());
        let s = Scenario {
            kappa: self.kappa,
            nbar_b: self.nbar_b,
            signal_det: DetectorModel::new(self.eta, self.nbar_d).map_err(map)?,
            idler_det: DetectorModel::new(self.eta_i(), self.nbar_d_i).map_err(|e| ConfigError(format!("idler: {e}")))?,
            nbar: self.nbar,
            probe_kind: self.probe_kind,
            intercept_eta: self.intercept_eta,
        };
        s.validate().map_err(map)?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario()?;
        if self.points < 2 {
            return err(format!("points = {} but a sweep needs at least 2", self.points));
        }
        if !(self.nbar_min.is_finite() && self.nbar_max.is_finite() && self.nbar_min >= 0.0 && self.nbar_min < self.nbar_max) {
            return err(format!(
                "sweep range nbar_min = {} .. nbar_max = {} must be nonempty and nonnegative",
                self.nbar_min, self.nbar_max
            ));
        }
        if self.spacing == Spacing::Log && self.nbar_min <= 0.0 {
            return err("log spacing needs nbar_min > 0");
        }
        if self.x_points < 1 || !(self.x_min <= self.x_max) {
            return err("wigner grid needs x_min <= x_max and x_points >= 1");
        }
        for &e in &self.eta_i_values {
            if !(0.0..=1.0).contains(&e) {
                return err(format!("eta_i_values entry {e} outside [0, 1]"));
            }
        }
        if self.probes.is_empty() {
            return err("probes must list at least one probe kind");
        }
        if self.threads == Some(0) {
            return err("threads must be >= 1");
        }
        self.trajectory_config(self.probe_kind)
            .validate()
            .map_err(|e| ConfigError(e.to_string()))
    }

    /// The sweep grid over `nbar`.
    pub fn nbar_grid(&self) -> Vec<f64> {
        let n = self.points;
        let t = |i: usize| i as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => (0..n)
                .map(|i| self.nbar_min + (self.nbar_max - self.nbar_min) * t(i))
                .collect(),
            Spacing::Log => {
                let (a, b) = (self.nbar_min.ln(), self.nbar_max.ln());
                (0..n).map(|i| (a + (b - a) * t(i)).exp()).collect()
            }
        }
    }

    pub fn x_grid(&self) -> Vec<f64> {
        if self.x_points == 1 {
            return vec![self.x_min];
        }
        let n = self.x_points;
        (0..n)
            .map(|i| self.x_min + (self.x_max - self.x_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn trajectory_config(&self, probe: ProbeKind) -> TrajectoryConfig {
        let scenario = Scenario {
            kappa: self.kappa,
            nbar_b: self.nbar_b,
            signal_det: DetectorModel {
                eta: self.eta,
                nbar_d: self.nbar_d,
            },
            idler_det: DetectorModel {
                eta: self.eta_i(),
                nbar_d: self.nbar_d_i,
            },
            nbar: self.nbar,
            probe_kind: probe,
            intercept_eta: self.intercept_eta,
        };
        TrajectoryConfig {
            scenario,
            shots: self.shots,
            trials: self.trials,
            ground_truth: self.ground_truth,
            seed: self.seed,
            threshold: self.threshold,
            shot_counting: self.shot_counting,
            record_stride: self.record_stride,
            trace_trials: self.trace_trials.clone(),
        }
    }
}
