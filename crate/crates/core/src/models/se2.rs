use serde::{Deserialize, Serialize};

use super::{require_non_negative, require_positive, ModelError};
use crate::geometry::{GeometryError, MechanicalModel};
use crate::numerics::{Matrix, Vector};

/// Outline of the body, as the distance `φ(θ)` from the rotation axis to the
/// lowest point of the body when rotated by `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyShape {
    /// Four-point star of length `2l`: `φ = l(|sin θ| + |cos θ|)`.
    Star { l: f64 },
    /// Ellipse with semi-axes `a`, `b`: `φ = √(a² sin²θ + b² cos²θ)`.
    Ellipse { a: f64, b: f64 },
}

const CORNER_TOL: f64 = 1e-12;

impl BodyShape {
    pub fn phi(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        match *self {
            BodyShape::Star { l } => l * (s.abs() + c.abs()),
            BodyShape::Ellipse { a, b } => (a * a * s * s + b * b * c * c).sqrt(),
        }
    }

    /// `dφ/dθ`. `None` at the corners of the star.
    pub fn phi_dot(&self, theta: f64) -> Option<f64> {
        let (s, c) = theta.sin_cos();
        match *self {
            BodyShape::Star { l } => {
                if s.abs() < CORNER_TOL || c.abs() < CORNER_TOL {
                    None
                } else {
                    Some(l * (s.signum() * c - c.signum() * s))
                }
            }
            BodyShape::Ellipse { a, b } => Some((a * a - b * b) * s * c / self.phi(theta)),
        }
    }

    /// Default moment of inertia about the centre for a body of mass `m`.
    ///
    /// Ellipse: `m(a² + b²)/4`. Star: two crossed thin rods of length `2l`,
    /// `m l²/3`.
    pub fn default_inertia(&self, mass: f64) -> f64 {
        match *self {
            BodyShape::Star { l } => mass * l * l / 3.0,
            BodyShape::Ellipse { a, b } => mass * (a * a + b * b) / 4.0,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match *self {
            BodyShape::Star { l } => require_positive("l", l),
            BodyShape::Ellipse { a, b } => {
                require_positive("a", a)?;
                require_positive("b", b)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Se2BodyParams {
    pub mass: f64,
    pub gravity: f64,
    /// Moment of inertia about the centre. `None` uses the shape default.
    #[serde(default)]
    pub inertia: Option<f64>,
    pub shape: BodyShape,
}

impl Default for Se2BodyParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
            inertia: None,
            shape: BodyShape::Ellipse { a: 1.0, b: 0.5 },
        }
    }
}

/// Planar rigid body over the floor. Coordinates `(θ, x, y)`.
///
/// `L = ½m(v_x² + v_y²) + ½I v_θ² − m g y`, gap `c = y − φ(θ)`. The boundary
/// basis is `{∂_x, ∂_θ + φ̇ ∂_y}` and the projection keeps `(v_x, v_θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Se2Body {
    mass: f64,
    gravity: f64,
    inertia: f64,
    shape: BodyShape,
}

impl Se2Body {
    pub fn new(params: Se2BodyParams) -> Result<Self, ModelError> {
        require_positive("mass", params.mass)?;
        require_non_negative("gravity", params.gravity)?;
        params.shape.validate()?;
        let inertia = params
            .inertia
            .unwrap_or_else(|| params.shape.default_inertia(params.mass));
        require_positive("inertia", inertia)?;
        Ok(Self {
            mass: params.mass,
            gravity: params.gravity,
            inertia,
            shape: params.shape,
        })
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn shape(&self) -> BodyShape {
        self.shape
    }

    fn slope(&self, q: &Vector) -> Result<f64, GeometryError> {
        self.shape.phi_dot(q[0]).ok_or_else(|| GeometryError::DegenerateFrame {
            reason: format!("star corner at θ = {}", q[0]),
        })
    }
}

impl MechanicalModel for Se2Body {
    fn dim(&self) -> usize {
        3
    }

    fn constraint_count(&self) -> usize {
        0
    }

    fn coordinate_names(&self) -> Vec<String> {
        vec!["theta".into(), "x".into(), "y".into()]
    }

    fn lagrangian(&self, q: &Vector, v: &Vector) -> f64 {
        0.5 * self.mass * (v[1] * v[1] + v[2] * v[2]) + 0.5 * self.inertia * v[0] * v[0]
            - self.mass * self.gravity * q[2]
    }

    fn dl_dq(&self, _q: &Vector, _v: &Vector) -> Vector {
        Vector::from_column_slice(&[0.0, 0.0, -self.mass * self.gravity])
    }

    fn dl_dv(&self, _q: &Vector, v: &Vector) -> Vector {
        Vector::from_column_slice(&[self.inertia * v[0], self.mass * v[1], self.mass * v[2]])
    }

    fn omega(&self, _q: &Vector) -> Matrix {
        Matrix::zeros(0, 3)
    }

    fn boundary_gap(&self, q: &Vector) -> f64 {
        q[2] - self.shape.phi(q[0])
    }

    fn boundary_gap_grad(&self, q: &Vector) -> Vector {
        // One-sided slopes average to this at star corners.
        let slope = self.shape.phi_dot(q[0]).unwrap_or(0.0);
        Vector::from_column_slice(&[-slope, 0.0, 1.0])
    }

    fn tangent_basis(&self, q: &Vector) -> Result<Matrix, GeometryError> {
        let slope = self.slope(q)?;
        Ok(Matrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 1.0, 0.0, slope]))
    }

    fn projection(&self, q: &Vector) -> Result<Matrix, GeometryError> {
        self.slope(q)?;
        Ok(Matrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]))
    }

    fn params(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("mass".into(), self.mass),
            ("gravity".into(), self.gravity),
            ("inertia".into(), self.inertia),
        ];
        match self.shape {
            BodyShape::Star { l } => out.push(("l".into(), l)),
            BodyShape::Ellipse { a, b } => {
                out.push(("a".into(), a));
                out.push(("b".into(), b));
            }
        }
        out
    }
}
