use serde::{Deserialize, Serialize};

use super::{require_non_negative, require_positive, ModelError};
use crate::geometry::{GeometryError, MechanicalModel};
use crate::numerics::{Matrix, Vector};

/// Point mass in the plane above the floor `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleParams {
    pub mass: f64,
    /// Zero is allowed and gives free motion.
    pub gravity: f64,
}

impl Default for ParticleParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
        }
    }
}

/// Coordinates `(x, y)`; `L = ½m(v_x² + v_y²) − m g y`, gap `c = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    params: ParticleParams,
}

impl Particle {
    pub fn new(params: ParticleParams) -> Result<Self, ModelError> {
        require_positive("mass", params.mass)?;
        require_non_negative("gravity", params.gravity)?;
        Ok(Self { params })
    }

    pub fn params_ref(&self) -> &ParticleParams {
        &self.params
    }
}

impl MechanicalModel for Particle {
    fn dim(&self) -> usize {
        2
    }

    fn constraint_count(&self) -> usize {
        0
    }

    fn coordinate_names(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn lagrangian(&self, q: &Vector, v: &Vector) -> f64 {
        let ParticleParams { mass, gravity } = self.params;
        0.5 * mass * (v[0] * v[0] + v[1] * v[1]) - mass * gravity * q[1]
    }

    fn dl_dq(&self, _q: &Vector, _v: &Vector) -> Vector {
        Vector::from_column_slice(&[0.0, -self.params.mass * self.params.gravity])
    }

    fn dl_dv(&self, _q: &Vector, v: &Vector) -> Vector {
        v * self.params.mass
    }

    fn omega(&self, _q: &Vector) -> Matrix {
        Matrix::zeros(0, 2)
    }

    fn boundary_gap(&self, q: &Vector) -> f64 {
        q[1]
    }

    fn boundary_gap_grad(&self, _q: &Vector) -> Vector {
        Vector::from_column_slice(&[0.0, 1.0])
    }

    fn tangent_basis(&self, _q: &Vector) -> Result<Matrix, GeometryError> {
        Ok(Matrix::from_column_slice(2, 1, &[1.0, 0.0]))
    }

    fn projection(&self, _q: &Vector) -> Result<Matrix, GeometryError> {
        Ok(Matrix::from_row_slice(1, 2, &[1.0, 0.0]))
    }

    fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("mass".into(), self.params.mass),
            ("gravity".into(), self.params.gravity),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn lagrangian_at_rest() {
        let model = Particle::new(ParticleParams::default()).unwrap();
        assert!((model.lagrangian(&v(&[0.0, 1.0]), &v(&[0.0, 0.0])) + 9.8).abs() < 1e-15);
    }

    #[test]
    fn floor_is_the_boundary() {
        let model = Particle::new(ParticleParams::default()).unwrap();
        assert_eq!(model.boundary_gap(&v(&[3.0, 0.0])), 0.0);
        assert!(model.boundary_gap(&v(&[3.0, -0.1])) < 0.0);
    }

    #[test]
    fn unconstrained() {
        let model = Particle::new(ParticleParams::default()).unwrap();
        assert_eq!(model.omega(&v(&[0.0, 1.0])).shape(), (0, 2));
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(Particle::new(ParticleParams {
            mass: 0.0,
            gravity: 9.8
        })
        .is_err());
        assert!(Particle::new(ParticleParams {
            mass: 1.0,
            gravity: 0.0
        })
        .is_ok());
    }
}
