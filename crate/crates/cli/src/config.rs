//! Run configuration: a TOML file with `[model]`, `[task]` and `[output]` sections.
//!
//! Unknown keys anywhere are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use catabird::model::{zoo_preset, Extrapolation, Preset, ProcessSpec};
use catabird::transient::Route;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_PATHS: usize = 10_000;

/// A semantic problem located by its key path, e.g. `model.xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either a named preset with parameters, or explicit rate tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Floor state for rate tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// `birth[i]` is the birth rate at `r + i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth: Option<Vec<f64>>,
    /// `death[i]` is the death rate at `r + 1 + i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// How the tables continue past their last entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<Growth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Hold,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteName {
    #[default]
    Direct,
    Decomposition,
}

impl From<RouteName> for Route {
    fn from(r: RouteName) -> Self {
        match r {
            RouteName::Direct => Route::Direct,
            RouteName::Decomposition => Route::Decomposition,
        }
    }
}

/// What `simulate` estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    #[default]
    FirstVisit,
    Catastrophe,
    Stationary,
    Path,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    /// Initial state; defaults to the floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    /// Target state for first-visit tasks; defaults to the floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Highest state written for distributions; defaults to the certified window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub route: RouteName,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub quantity: Quantity,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_times() -> Vec<f64> {
    vec![1.0]
}
fn default_lambdas() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_paths() -> usize {
    DEFAULT_PATHS
}
fn default_burn_in() -> f64 {
    100.0
}
fn default_horizon() -> f64 {
    10_100.0
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            j: None,
            k: None,
            times: default_times(),
            lambdas: default_lambdas(),
            n_max: None,
            route: RouteName::default(),
            tol: DEFAULT_TOL,
            tail_tol: DEFAULT_TAIL_TOL,
            seed: DEFAULT_SEED,
            n_paths: DEFAULT_PATHS,
            quantity: Quantity::default(),
            burn_in: default_burn_in(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::default(),
        }
    }
}

/// Parses and validates config text; `origin` names the source in messages.
pub fn parse_config(text: &str, origin: &str) -> anyhow::Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{origin}: {e}"))?;
    cfg.validate().map_err(|e| anyhow::anyhow!("{origin}: {e}"))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    parse_config(&text, &path.display().to_string())
}

/// Serializes back to config text that parses to an equal `RunConfig`.
pub fn emit_config(cfg: &RunConfig) -> anyhow::Result<String> {
    Ok(toml::to_string(cfg)?)
}

fn check_rates(path: &str, v: &[f64], positive: bool) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(ConfigError::new(path, "must hold at least one rate"));
    }
    for (i, &x) in v.iter().enumerate() {
        let ok = x.is_finite() && if positive { x > 0.0 } else { x >= 0.0 };
        if !ok {
            let want = if positive { "positive" } else { "nonnegative" };
            return Err(ConfigError::new(format!("{path}[{i}]"), format!("must be finite and {want}, got {x}")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        self.task.validate()
    }
}

impl ModelConfig {
    fn has_tables(&self) -> bool {
        self.r.is_some() || self.birth.is_some() || self.death.is_some() || self.xi.is_some() || self.growth.is_some()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.preset {
            Some(name) => {
                if self.has_tables() {
                    return Err(ConfigError::new("model", "give either a preset or rate tables, not both"));
                }
                for (k, v) in &self.params {
                    if !v.is_finite() || *v < 0.0 {
                        return Err(ConfigError::new(
                            format!("model.params.{k}"),
                            format!("must be finite and nonnegative, got {v}"),
                        ));
                    }
                }
                zoo_preset::<f64>(name, &self.params).map(|_| ()).map_err(|e| {
                    let path = match &e {
                        catabird::ModelError::BadParameter { param, .. } => format!("model.params.{param}"),
                        catabird::ModelError::UnknownPreset(_) => "model.preset".into(),
                        _ => "model".into(),
                    };
                    ConfigError::new(path, e.to_string())
                })
            }
            None => {
                if !self.params.is_empty() {
                    return Err(ConfigError::new("model.params", "parameters need a preset"));
                }
                let birth = self.birth.as_deref().ok_or_else(|| ConfigError::new("model.birth", "is missing"))?;
                let death = self.death.as_deref().ok_or_else(|| ConfigError::new("model.death", "is missing"))?;
                check_rates("model.birth", birth, true)?;
                check_rates("model.death", death, false)?;
                if self.growth == Some(Growth::Linear) {
                    for (path, v) in [("model.birth", birth), ("model.death", death)] {
                        if v.len() >= 2 && v[v.len() - 1] < v[v.len() - 2] {
                            return Err(ConfigError::new(path, "linear growth needs a nondecreasing last step"));
                        }
                    }
                }
                match self.xi {
                    None => Err(ConfigError::new("model.xi", "is missing")),
                    Some(x) if !(x.is_finite() && x >= 0.0) => {
                        Err(ConfigError::new("model.xi", format!("must be finite and nonnegative, got {x}")))
                    }
                    Some(_) => Ok(()),
                }
            }
        }
    }

    /// The process this section describes.
    pub fn build(&self) -> anyhow::Result<Preset<f64>> {
        if let Some(name) = &self.preset {
            return Ok(zoo_preset(name, &self.params)?);
        }
        let rule = match self.growth.unwrap_or(Growth::Hold) {
            Growth::Hold => Extrapolation::Hold,
            Growth::Linear => Extrapolation::Linear,
        };
        Ok(Preset::Homogeneous(ProcessSpec::from_tables(
            self.r.unwrap_or(0),
            self.birth.clone().unwrap_or_default(),
            self.death.clone().unwrap_or_default(),
            self.xi.unwrap_or(0.0),
            rule,
        )?))
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(ConfigError::new("task.times", "must be finite and nonnegative"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("task.times", "must be strictly increasing"));
        }
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(ConfigError::new("task.lambdas", "must be finite and positive"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(ConfigError::new("task.tol", "must lie in (0, 1)"));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(ConfigError::new("task.tail_tol", "must lie in (0, 1)"));
        }
        if self.n_paths < 100 {
            return Err(ConfigError::new("task.n_paths", "must be at least 100"));
        }
        if !(self.burn_in >= 0.0 && self.horizon > self.burn_in && self.horizon.is_finite()) {
            return Err(ConfigError::new("task.horizon", "must be finite and exceed task.burn_in"));
        }
        Ok(())
    }
}
