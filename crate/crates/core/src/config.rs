//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model": {"case": "i", "beta": 2, "sigma": 1, "eta": 1, "lambda": 5, "x0": 1, "p": 0.5},
//!   "horizon": 1.0,
//!   "steps": 100,
//!   "particles": [100, 400, 700],
//!   "replications": 1000,
//!   "seed": 7
//! }
//! ```
//!
//! `steps` and `particles` accept a number or a list. A run manifest, which
//! stores the resolved configuration under `"config"`, is accepted as well.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::harness::SweepSpec;
use crate::model::{
    sine_constraint_root, validate, AffineParams, CaseIIIParams, CaseIIParams, CaseIParams, Constraint, ModelError,
    ModelSpec,
};
use crate::scheme::GridSpec;

pub const DEFAULT_REPLICATIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

/// Ornstein–Uhlenbeck parameters where the start may be given relative to
/// the root of the constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseIIIConfig {
    pub beta: f64,
    pub a: f64,
    pub sigma: f64,
    pub eta: f64,
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    /// `x0 = root of x + α sin x = p, plus this offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_offset: Option<f64>,
}

impl CaseIIIConfig {
    pub fn resolve(&self) -> Result<CaseIIIParams, String> {
        let x0 = match (self.x0, self.x0_offset) {
            (Some(x0), None) => x0,
            (None, Some(offset)) => {
                if self.alpha.abs() >= 1.0 || !self.alpha.is_finite() {
                    return Err(format!("alpha must satisfy |alpha| < 1, got {}", self.alpha));
                }
                sine_constraint_root(self.alpha, self.p) + offset
            }
            _ => return Err("case iii needs exactly one of x0 and x0_offset".into()),
        };
        Ok(CaseIIIParams {
            beta: self.beta,
            a: self.a,
            sigma: self.sigma,
            eta: self.eta,
            lambda: self.lambda,
            x0,
            p: self.p,
            alpha: self.alpha,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConstraintConfig {
    Linear { p: f64 },
    Sine { alpha: f64, p: f64 },
}

impl ConstraintConfig {
    pub fn build(&self) -> Result<Constraint, ModelError> {
        match *self {
            ConstraintConfig::Linear { p } => Constraint::linear(p),
            ConstraintConfig::Sine { alpha, p } => Constraint::sine_perturbed(alpha, p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomConfig {
    #[serde(flatten)]
    pub params: AffineParams,
    pub constraint: ConstraintConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum ModelConfig {
    #[serde(rename = "i")]
    CaseI(CaseIParams),
    #[serde(rename = "ii")]
    CaseII(CaseIIParams),
    #[serde(rename = "iii")]
    CaseIII(CaseIIIConfig),
    #[serde(rename = "custom")]
    Custom(CustomConfig),
}

impl ModelConfig {
    pub fn case_id(&self) -> &'static str {
        match self {
            ModelConfig::CaseI(_) => "i",
            ModelConfig::CaseII(_) => "ii",
            ModelConfig::CaseIII(_) => "iii",
            ModelConfig::Custom(_) => "custom",
        }
    }

    pub fn build(&self) -> Result<(ModelSpec, Constraint), String> {
        let built = match self {
            ModelConfig::CaseI(p) => p.build(),
            ModelConfig::CaseII(p) => p.build(),
            ModelConfig::CaseIII(c) => c.resolve()?.build(),
            ModelConfig::Custom(c) => ModelSpec::affine(&c.params).and_then(|m| Ok((m, c.constraint.build()?))),
        };
        built.map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    Many(Vec<usize>),
}

impl Counts {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Counts::One(v) => vec![*v],
            Counts::Many(v) => v.clone(),
        }
    }
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub horizon: f64,
    pub steps: Counts,
    pub particles: Counts,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    /// Activity threshold of the density estimator; three standard errors when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_active: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(parse_error)?;
        let config = match value.get("config") {
            Some(inner) if value.get("model").is_none() => {
                Self::deserialize(inner).map_err(|e| ConfigError::Parse {
                    line: 0,
                    column: 0,
                    message: format!("in \"config\": {e}"),
                })?
            }
            _ => serde_json::from_str(text).map_err(parse_error)?,
        };
        config.check()?;
        Ok(config)
    }

    /// Structural checks plus model validation; collects every violation.
    pub fn check(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            violations.push(format!("horizon must be positive and finite, got {}", self.horizon));
        }
        for (name, list) in [("steps", self.steps.values()), ("particles", self.particles.values())] {
            if list.is_empty() {
                violations.push(format!("{name} must not be empty"));
            }
            if list.contains(&0) {
                violations.push(format!("{name} must be at least 1"));
            }
        }
        if self.replications == 0 {
            violations.push("replications must be at least 1".into());
        }
        if self.snapshot_stride == Some(0) {
            violations.push("snapshot_stride must be at least 1".into());
        }
        if let Some(eps) = self.epsilon_active {
            if !(eps.is_finite() && eps >= 0.0) {
                violations.push(format!("epsilon_active must be nonnegative, got {eps}"));
            }
        }
        match self.model.build() {
            Ok((model, constraint)) => violations.extend(validate(&model, &constraint).violations),
            Err(e) => violations.push(format!("model: {e}")),
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(violations))
        }
    }

    pub fn build(&self) -> Result<(ModelSpec, Constraint), ConfigError> {
        self.model.build().map_err(|e| ConfigError::Validation(vec![e]))
    }

    /// Grid for the first entry of `steps`.
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.horizon, self.steps.values()[0]).expect("checked at parse time")
    }

    pub fn sweep(&self, seed: u64) -> SweepSpec {
        SweepSpec {
            horizon: self.horizon,
            steps: self.steps.values(),
            particles: self.particles.values(),
            replications: self.replications,
            seed,
        }
    }
}

fn parse_error(e: serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}
