//! Run configuration: TOML or JSON files with strict (unknown keys
//! rejected) parsing, defaults, and validation that names the offending
//! field. A silent typo in a physics parameter would otherwise produce a
//! plausible wrong number.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use spincavity_core::BellState;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config extension must be .toml or .json (got {0})")]
    UnknownFormat(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field {path}: {message}")]
    Field { path: String, message: String },
    #[error("config command {config} does not match the invoked subcommand {invoked}")]
    CommandMismatch { config: String, invoked: String },
}

fn field_err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: String,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Value>,
}

/// A validated run: the command with its parameter block, the seed that
/// fully determines stochastic output, and an optional artifact path.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Sweep(SweepParams),
    Bsa(BsaParams),
    Teleport(TeleportParams),
    Swap(SwapParams),
    Echo(EchoParams),
    Link(LinkParams),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Bsa(_) => "bsa",
            Command::Teleport(_) => "teleport",
            Command::Swap(_) => "swap",
            Command::Echo(_) => "echo",
            Command::Link(_) => "link",
        }
    }

    /// Default artifact file name.
    pub fn default_output(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep.csv",
            Command::Bsa(_) => "bsa.jsonl",
            Command::Teleport(_) => "teleport.jsonl",
            Command::Swap(_) => "swap.jsonl",
            Command::Echo(_) => "echo.jsonl",
            Command::Link(_) => "link.jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + i as f64 * step).collect()
    }
}

fn default_g_grid() -> GridSpec {
    GridSpec { min: 0.01, max: 3.0, count: 150 }
}

fn default_ks_list() -> Vec<f64> {
    vec![1e-6, 0.7, 1.1, 1.3]
}

fn default_gamma() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[serde(default = "default_g_grid")]
    pub g_norm: GridSpec,
    #[serde(default = "default_ks_list")]
    pub ks_over_k: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub gamma_ratio: f64,
}

impl SweepParams {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.g_norm.min.is_finite() && self.g_norm.max.is_finite()) {
            return Err(field_err("params.g_norm", "bounds must be finite"));
        }
        if self.g_norm.max < self.g_norm.min {
            return Err(field_err("params.g_norm", "max must be >= min"));
        }
        if self.g_norm.min < 0.0 {
            return Err(field_err("params.g_norm.min", "must be >= 0"));
        }
        if self.g_norm.count == 0 {
            return Err(field_err("params.g_norm.count", "must be >= 1"));
        }
        if self.ks_over_k.is_empty() {
            return Err(field_err("params.ks_over_k", "must not be empty"));
        }
        for ks in &self.ks_over_k {
            if !(*ks >= 0.0) {
                return Err(field_err("params.ks_over_k", format!("{ks} is negative")));
            }
        }
        if !(self.gamma_ratio >= 0.0) {
            return Err(field_err("params.gamma_ratio", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzerKind {
    Type1,
    Type2,
}

impl AnalyzerKind {
    pub fn name(self) -> &'static str {
        match self {
            AnalyzerKind::Type1 => "type1",
            AnalyzerKind::Type2 => "type2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Ideal,
    Lossy,
    Ebs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    MaxEta,
    MaxFidelity,
}

fn default_mode() -> ModeConfig {
    ModeConfig {
        kind: ModeKind::Ideal,
        delta_phi: None,
        g_norm: None,
        ks_over_k: None,
        gamma_ratio: None,
        branch: None,
        t0: None,
        rh: None,
    }
}

/// Gate-mode block. `kind` selects which of the optional knobs apply:
/// `delta_phi` for ideal, the cavity point plus `branch` for lossy,
/// `t0`/`rh` (re, im pairs) for ebs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub kind: ModeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_over_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rh: Option<[f64; 2]>,
}

impl ModeConfig {
    fn validate(&self, analyzer: AnalyzerKind) -> Result<(), ConfigError> {
        let reject = |cond: bool, path: &str| {
            if cond {
                Err(field_err(path, format!("not applicable to mode `{:?}`", self.kind)))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ModeKind::Ideal => {
                reject(self.g_norm.is_some(), "params.mode.g_norm")?;
                reject(self.ks_over_k.is_some(), "params.mode.ks_over_k")?;
                reject(self.gamma_ratio.is_some(), "params.mode.gamma_ratio")?;
                reject(self.branch.is_some(), "params.mode.branch")?;
                reject(self.t0.is_some(), "params.mode.t0")?;
                reject(self.rh.is_some(), "params.mode.rh")?;
            }
            ModeKind::Lossy => {
                if analyzer == AnalyzerKind::Type2 {
                    return Err(field_err(
                        "params.mode.kind",
                        "the type2 analyzer takes kind = \"ideal\" (defaults) or \"ebs\"",
                    ));
                }
                if self.g_norm.is_none() {
                    return Err(field_err("params.mode.g_norm", "required for lossy mode"));
                }
                if self.ks_over_k.is_none() {
                    return Err(field_err("params.mode.ks_over_k", "required for lossy mode"));
                }
                if let Some(ks) = self.ks_over_k {
                    if !(ks >= 0.0) {
                        return Err(field_err("params.mode.ks_over_k", "must be >= 0"));
                    }
                }
                if let Some(g) = self.g_norm {
                    if !(g >= 0.0) {
                        return Err(field_err("params.mode.g_norm", "must be >= 0"));
                    }
                }
                if let Some(gamma) = self.gamma_ratio {
                    if !(gamma >= 0.0) {
                        return Err(field_err("params.mode.gamma_ratio", "must be >= 0"));
                    }
                }
                reject(self.delta_phi.is_some(), "params.mode.delta_phi")?;
                reject(self.t0.is_some(), "params.mode.t0")?;
                reject(self.rh.is_some(), "params.mode.rh")?;
            }
            ModeKind::Ebs => {
                if analyzer == AnalyzerKind::Type1 {
                    return Err(field_err(
                        "params.mode.kind",
                        "the type1 analyzer takes kind = \"ideal\" or \"lossy\"",
                    ));
                }
                reject(self.delta_phi.is_some(), "params.mode.delta_phi")?;
                reject(self.g_norm.is_some(), "params.mode.g_norm")?;
                reject(self.ks_over_k.is_some(), "params.mode.ks_over_k")?;
                reject(self.gamma_ratio.is_some(), "params.mode.gamma_ratio")?;
                reject(self.branch.is_some(), "params.mode.branch")?;
            }
        }
        Ok(())
    }
}

fn default_analyzer() -> AnalyzerKind {
    AnalyzerKind::Type1
}

fn default_bell() -> BellState {
    BellState::PsiPlus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsaParams {
    #[serde(default = "default_analyzer")]
    pub analyzer: AnalyzerKind,
    #[serde(default = "default_bell")]
    pub input: BellState,
    #[serde(default = "default_mode")]
    pub mode: ModeConfig,
    /// 0 enumerates every forced branch; otherwise samples this many runs.
    #[serde(default)]
    pub shots: u64,
}

fn default_alpha() -> [f64; 2] {
    [0.6, 0.0]
}

fn default_beta() -> [f64; 2] {
    [0.8, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportParams {
    #[serde(default = "default_analyzer")]
    pub analyzer: AnalyzerKind,
    #[serde(default = "default_mode")]
    pub mode: ModeConfig,
    /// Input qubit amplitudes as (re, im) pairs; must be normalized.
    #[serde(default = "default_alpha")]
    pub alpha: [f64; 2],
    #[serde(default = "default_beta")]
    pub beta: [f64; 2],
    #[serde(default)]
    pub shots: u64,
    /// When set, reported fidelities include the spin-dephasing factor at
    /// Δt/T2e of this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t_over_t2e: Option<f64>,
}

impl TeleportParams {
    fn validate(&self) -> Result<(), ConfigError> {
        let n2 = self.alpha[0] * self.alpha[0]
            + self.alpha[1] * self.alpha[1]
            + self.beta[0] * self.beta[0]
            + self.beta[1] * self.beta[1];
        if (n2 - 1.0).abs() > 1e-9 {
            return Err(field_err(
                "params.alpha/beta",
                format!("input qubit must be normalized (|α|²+|β|² = {n2})"),
            ));
        }
        if let Some(dt) = self.delta_t_over_t2e {
            if !(dt >= 0.0) {
                return Err(field_err("params.delta_t_over_t2e", "must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapParams {
    #[serde(default = "default_analyzer")]
    pub analyzer: AnalyzerKind,
    #[serde(default = "default_mode")]
    pub mode: ModeConfig,
    #[serde(default)]
    pub shots: u64,
}

fn default_t2_star() -> f64 {
    1.0
}

fn default_total_time() -> f64 {
    1.0
}

fn default_echo_on() -> bool {
    true
}

fn default_n_samples() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoParams {
    #[serde(default = "default_t2_star")]
    pub t2_star: f64,
    #[serde(default = "default_total_time")]
    pub total_time: f64,
    #[serde(default = "default_echo_on")]
    pub echo: bool,
    #[serde(default = "default_n_samples")]
    pub n_samples: u64,
}

impl EchoParams {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.t2_star > 0.0) {
            return Err(field_err("params.t2_star", "must be > 0"));
        }
        if !(self.total_time >= 0.0) {
            return Err(field_err("params.total_time", "must be >= 0"));
        }
        if self.n_samples == 0 {
            return Err(field_err("params.n_samples", "must be >= 1"));
        }
        Ok(())
    }
}

fn default_p_arrival() -> f64 {
    0.01
}

fn default_attempt_period() -> f64 {
    1.0
}

fn default_window() -> u32 {
    100
}

fn default_t2e() -> f64 {
    1e9
}

fn default_n_trials() -> u64 {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    #[serde(default = "default_p_arrival")]
    pub p_arrival: f64,
    #[serde(default = "default_attempt_period")]
    pub attempt_period: f64,
    #[serde(default = "default_window")]
    pub window_attempts: u32,
    #[serde(default = "default_t2e")]
    pub t2e: f64,
    #[serde(default = "default_n_trials")]
    pub n_trials: u64,
}

impl LinkParams {
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p_arrival > 0.0 && self.p_arrival <= 1.0) {
            return Err(field_err("params.p_arrival", "must be in (0, 1]"));
        }
        if self.window_attempts == 0 {
            return Err(field_err("params.window_attempts", "must be >= 1"));
        }
        if !(self.t2e > 0.0) {
            return Err(field_err("params.t2e", "must be > 0"));
        }
        if !(self.attempt_period >= 0.0) {
            return Err(field_err("params.attempt_period", "must be >= 0"));
        }
        if self.n_trials == 0 {
            return Err(field_err("params.n_trials", "must be >= 1"));
        }
        Ok(())
    }
}

fn params_value(params: Option<Value>) -> Value {
    params.unwrap_or(Value::Object(serde_json::Map::new()))
}

fn from_params<T: serde::de::DeserializeOwned>(params: Option<Value>) -> Result<T, ConfigError> {
    serde_json::from_value(params_value(params))
        .map_err(|e| ConfigError::Parse(format!("params: {e}")))
}

impl RunConfig {
    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let command = match raw.command.as_str() {
            "sweep" => {
                let p: SweepParams = from_params(raw.params)?;
                p.validate()?;
                Command::Sweep(p)
            }
            "bsa" => {
                let p: BsaParams = from_params(raw.params)?;
                p.mode.validate(p.analyzer)?;
                Command::Bsa(p)
            }
            "teleport" => {
                let p: TeleportParams = from_params(raw.params)?;
                p.mode.validate(p.analyzer)?;
                p.validate()?;
                Command::Teleport(p)
            }
            "swap" => {
                let p: SwapParams = from_params(raw.params)?;
                p.mode.validate(p.analyzer)?;
                Command::Swap(p)
            }
            "echo" => {
                let p: EchoParams = from_params(raw.params)?;
                p.validate()?;
                Command::Echo(p)
            }
            "link" => {
                let p: LinkParams = from_params(raw.params)?;
                p.validate()?;
                Command::Link(p)
            }
            other => {
                return Err(field_err(
                    "command",
                    format!(
                        "unknown command `{other}` (expected sweep, bsa, teleport, swap, echo or link)"
                    ),
                ))
            }
        };
        Ok(RunConfig { command, seed: raw.seed, output_path: raw.output_path })
    }

    fn to_raw(&self) -> RawConfig {
        let params = match &self.command {
            Command::Sweep(p) => serde_json::to_value(p),
            Command::Bsa(p) => serde_json::to_value(p),
            Command::Teleport(p) => serde_json::to_value(p),
            Command::Swap(p) => serde_json::to_value(p),
            Command::Echo(p) => serde_json::to_value(p),
            Command::Link(p) => serde_json::to_value(p),
        }
        .expect("command params serialize");
        RawConfig {
            command: self.command.name().to_string(),
            seed: self.seed,
            output_path: self.output_path.clone(),
            params: Some(params),
        }
    }

    /// Serialize in the given format; `parse_config_str` inverts this.
    pub fn serialize(&self, format: ConfigFormat) -> String {
        let raw = self.to_raw();
        match format {
            ConfigFormat::Toml => toml::to_string(&raw).expect("config serializes to TOML"),
            ConfigFormat::Json => {
                serde_json::to_string_pretty(&raw).expect("config serializes to JSON")
            }
        }
    }
}

/// Parse a config from text in the given format.
pub fn parse_config_str(text: &str, format: ConfigFormat) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = match format {
        ConfigFormat::Toml => {
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
        }
        ConfigFormat::Json => {
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
        }
    };
    RunConfig::from_raw(raw)
}

/// Read and parse a config file; the format is chosen by extension.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => ConfigFormat::Toml,
        Some("json") => ConfigFormat::Json,
        other => return Err(ConfigError::UnknownFormat(format!("{other:?}"))),
    };
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config_str(&text, format)
}
