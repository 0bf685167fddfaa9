//! Built-in mechanical systems: a bouncing particle, a planar rigid body
//! bouncing on a floor, and a nonholonomic spherical pendulum inside a
//! cylinder.

mod particle;
mod pendulum;
mod se2;

use thiserror::Error;

pub use particle::{Particle, ParticleParams};
pub use pendulum::{ConstraintGain, Pendulum, PendulumParams};
pub use se2::{BodyShape, Se2Body, Se2BodyParams};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid model parameter `{name}`: {reason}")]
pub struct ModelError {
    pub name: &'static str,
    pub reason: String,
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

fn require_non_negative(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError {
            name,
            reason: format!("must be non-negative and finite, got {value}"),
        })
    }
}
