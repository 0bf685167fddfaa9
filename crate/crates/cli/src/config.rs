//! Simulation config: JSON schema, parsing and validation.

use std::fs;
use std::path::{Path, PathBuf};

use nhvi_core::integrator::BoundaryMomentum;
use nhvi_core::{
    MechanicalModel, ModelError, NewtonOptions, Particle, ParticleParams, Pendulum, PendulumParams, Rule, Se2Body,
    Se2BodyParams,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    Particle(ParticleParams),
    Se2Body(Se2BodyParams),
    Pendulum(PendulumParams),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Particle(_) => "particle",
            ModelConfig::Se2Body(_) => "se2_body",
            ModelConfig::Pendulum(_) => "pendulum",
        }
    }

    pub fn build(&self) -> Result<Box<dyn MechanicalModel>, ModelError> {
        Ok(match *self {
            ModelConfig::Particle(p) => Box::new(Particle::new(p)?),
            ModelConfig::Se2Body(p) => Box::new(Se2Body::new(p)?),
            ModelConfig::Pendulum(p) => Box::new(Pendulum::new(p)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Energy,
    Coordinates,
    PlaneTrajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub summary: bool,
    #[serde(default)]
    pub plots: Vec<PlotKind>,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv: true,
            summary: true,
            plots: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelConfig,
    pub rule: Rule,
    /// Continuous initial configuration.
    pub q0: Vec<f64>,
    /// Continuous initial velocity.
    pub v0: Vec<f64>,
    #[serde(default)]
    pub t0: f64,
    pub t_final: f64,
    pub h: f64,
    #[serde(default)]
    pub solver: NewtonOptions,
    #[serde(default)]
    pub boundary_momentum: BoundaryMomentum,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("`{key}` has {actual} entries, the {model} model needs {expected}")]
    DimensionMismatch {
        key: &'static str,
        model: &'static str,
        expected: usize,
        actual: usize,
    },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            key: e.path().to_string(),
            message: e.into_inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Check the invariants serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", format!("timestep must be positive and finite, got {}", self.h)));
        }
        if !self.t0.is_finite() {
            return Err(invalid("t0", "must be finite"));
        }
        if !(self.t_final > self.t0 && self.t_final.is_finite()) {
            return Err(invalid(
                "t_final",
                format!("must be finite and exceed t0 = {}, got {}", self.t0, self.t_final),
            ));
        }
        if ((self.t_final - self.t0) / self.h).round() < 1.0 {
            return Err(invalid("h", "interval is shorter than one step"));
        }
        self.solver.validate().map_err(|reason| invalid("solver", reason))?;
        let model = self.model.build().map_err(|e| invalid(&format!("model.{}", e.name), e.reason))?;
        for (key, values) in [("q0", &self.q0), ("v0", &self.v0)] {
            if values.len() != model.dim() {
                return Err(ConfigError::DimensionMismatch {
                    key,
                    model: self.model.name(),
                    expected: model.dim(),
                    actual: values.len(),
                });
            }
            if let Some(i) = values.iter().position(|x| !x.is_finite()) {
                return Err(invalid(&format!("{key}[{i}]"), "must be finite"));
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SimConfig::from_json(&text)
}

/// Configs shipped with the binary, by demo name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "particle" => Some(include_str!("../configs/particle.json")),
        "ellipse" => Some(include_str!("../configs/ellipse.json")),
        "pendulum" => Some(include_str!("../configs/pendulum.json")),
        _ => None,
    }
}
