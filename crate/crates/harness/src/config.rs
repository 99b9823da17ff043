//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! env = "gridworld"              # or "synthetic"
//! map = "../maps/fixture.txt"    # gridworld only, relative to this file
//! mode = "faithful"              # or "fresh_context"
//! policy = ["blender", "always_safe", "always_performant"]
//! horizon = 20000                # synthetic: steps per seed
//! episodes = 30                  # gridworld: episodes per seed
//! episode_len = 1000
//! seeds = [0, 1, 2]
//! output_dir = "out"
//! write_steps = true
//!
//! [estimator]                    # every key optional
//! lambda = 1.0
//! sigma = 0.1
//! s_bound = 1.5
//! l_bound = 1.0
//! delta = 0.1
//!
//! [synthetic]                    # every key optional
//! dim = 4
//! arms = 3
//! objectives = 2
//! sigma = 0.1
//! noise = "gaussian"             # or "uniform"
//! coupling = "shared"            # or "per_objective"
//! theta_norm = 1.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use moblend_core::env::gridworld::{PERFORMANT_ARM, SAFE_ARM};
use moblend_core::env::synthetic::{NoiseCoupling, NoiseModel, SyntheticConfig};
use moblend_core::{EstimatorConfig, Policy, SelectionMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Synthetic,
    Gridworld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Blender,
    AlwaysSafe,
    AlwaysPerformant,
    UniformRandom,
}

impl PolicyName {
    pub fn policy(self) -> Policy {
        match self {
            Self::Blender => Policy::Blend,
            Self::AlwaysSafe => Policy::Fixed(SAFE_ARM),
            Self::AlwaysPerformant => Policy::Fixed(PERFORMANT_ARM),
            Self::UniformRandom => Policy::UniformRandom,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Blender => "blender",
            Self::AlwaysSafe => "always_safe",
            Self::AlwaysPerformant => "always_performant",
            Self::UniformRandom => "uniform_random",
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Faithful,
    FreshContext,
}

impl From<ModeName> for SelectionMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Faithful => SelectionMode::Faithful,
            ModeName::FreshContext => SelectionMode::FreshContext,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(PolicyName),
    Many(Vec<PolicyName>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<PolicyName> {
        match self {
            Self::One(p) => vec![*p],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub env: EnvKind,
    pub map: Option<PathBuf>,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default = "default_policy")]
    pub policy: OneOrMany,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_episode_len")]
    pub episode_len: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub write_steps: bool,
}

fn default_policy() -> OneOrMany {
    OneOrMany::One(PolicyName::Blender)
}
fn default_horizon() -> u64 {
    1_000
}
fn default_episodes() -> usize {
    30
}
fn default_episode_len() -> usize {
    1_000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub lambda: f64,
    pub sigma: f64,
    pub s_bound: f64,
    pub l_bound: f64,
    pub delta: f64,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let d = EstimatorConfig::with_defaults(1, 1);
        Self {
            lambda: d.lambda,
            sigma: d.sigma,
            s_bound: d.s_bound,
            l_bound: d.l_bound,
            delta: d.delta,
        }
    }
}

impl EstimatorSection {
    pub fn to_config(self, dim: usize, objectives: usize) -> EstimatorConfig {
        EstimatorConfig {
            dim,
            objectives,
            lambda: self.lambda,
            sigma: self.sigma,
            s_bound: self.s_bound,
            l_bound: self.l_bound,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseName {
    #[default]
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingName {
    #[default]
    Shared,
    PerObjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    pub dim: usize,
    pub arms: usize,
    pub objectives: usize,
    pub sigma: f64,
    pub noise: NoiseName,
    pub coupling: CouplingName,
    pub theta_norm: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let d = SyntheticConfig::default();
        Self {
            dim: d.dim,
            arms: d.arms,
            objectives: d.objectives,
            sigma: d.sigma,
            noise: NoiseName::Gaussian,
            coupling: CouplingName::Shared,
            theta_norm: d.theta_norm,
        }
    }
}

impl SyntheticSection {
    pub fn to_config(self, l_bound: f64) -> SyntheticConfig {
        SyntheticConfig {
            dim: self.dim,
            arms: self.arms,
            objectives: self.objectives,
            sigma: self.sigma,
            noise: match self.noise {
                NoiseName::Gaussian => NoiseModel::Gaussian,
                NoiseName::Uniform => NoiseModel::Uniform,
            },
            coupling: match self.coupling {
                CouplingName::Shared => NoiseCoupling::Shared,
                CouplingName::PerObjective => NoiseCoupling::PerObjective,
            },
            l_bound,
            theta_norm: self.theta_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub synthetic: SyntheticSection,
}

impl ExperimentConfig {
    /// Parses and validates; a relative map path is resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text)?;
        if let Some(map) = &cfg.experiment.map {
            if map.is_relative() {
                cfg.experiment.map = Some(base.join(map));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn policies(&self) -> Vec<PolicyName> {
        self.experiment.policy.to_vec()
    }

    /// `(d, m, K)` of the configured environment.
    pub fn shape(&self) -> (usize, usize, usize) {
        match self.experiment.env {
            EnvKind::Gridworld => (3, 2, 2),
            EnvKind::Synthetic => (self.synthetic.dim, self.synthetic.objectives, self.synthetic.arms),
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let (d, m, _) = self.shape();
        self.estimator.to_config(d, m)
    }

    /// Steps per seed.
    pub fn total_steps(&self) -> u64 {
        match self.experiment.env {
            EnvKind::Gridworld => (self.experiment.episodes * self.experiment.episode_len) as u64,
            EnvKind::Synthetic => self.experiment.horizon,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return Err(invalid("experiment.seeds", "must list at least one seed"));
        }
        let mut seen = e.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != e.seeds.len() {
            return Err(invalid("experiment.seeds", "duplicate seed"));
        }
        let policies = self.policies();
        if policies.is_empty() {
            return Err(invalid("experiment.policy", "must name at least one policy"));
        }
        if e.episode_len == 0 {
            return Err(invalid("experiment.episode_len", "must be at least 1"));
        }
        match e.env {
            EnvKind::Gridworld => {
                if e.episodes == 0 {
                    return Err(invalid("experiment.episodes", "must be at least 1"));
                }
                match &e.map {
                    None => return Err(invalid("experiment.map", "required for the gridworld")),
                    Some(p) if !p.is_file() => {
                        return Err(invalid("experiment.map", format!("{} does not exist", p.display())))
                    }
                    Some(_) => {}
                }
            }
            EnvKind::Synthetic => {
                if e.horizon == 0 {
                    return Err(invalid("experiment.horizon", "must be at least 1"));
                }
                let s = &self.synthetic;
                for (field, v) in [
                    ("synthetic.dim", s.dim),
                    ("synthetic.arms", s.arms),
                    ("synthetic.objectives", s.objectives),
                ] {
                    if v == 0 {
                        return Err(invalid(field, "must be at least 1"));
                    }
                }
                if !(s.sigma.is_finite() && s.sigma >= 0.0) {
                    return Err(invalid("synthetic.sigma", "must be finite and >= 0"));
                }
                if !(s.theta_norm.is_finite() && s.theta_norm >= 0.0) {
                    return Err(invalid("synthetic.theta_norm", "must be finite and >= 0"));
                }
                if s.theta_norm > self.estimator.s_bound {
                    return Err(invalid("synthetic.theta_norm", "exceeds estimator.s_bound"));
                }
                let needs_two = policies
                    .iter()
                    .any(|p| matches!(p, PolicyName::AlwaysSafe | PolicyName::AlwaysPerformant));
                if needs_two && s.arms < 2 {
                    return Err(invalid("experiment.policy", "fixed-arm baselines need at least 2 arms"));
                }
            }
        }
        self.estimator_config().validate().map_err(|err| match err {
            moblend_core::Error::InvalidConfig { field, reason } => invalid(&format!("estimator.{field}"), reason),
            other => invalid("estimator", other.to_string()),
        })
    }
}
