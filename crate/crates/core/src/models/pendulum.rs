use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require_non_negative, require_positive, ModelError};
use crate::geometry::{GeometryError, MechanicalModel};
use crate::numerics::{Matrix, Vector};

/// Configurations with `|sin θ|` below this are rejected as initial states.
pub const POLE_TOL: f64 = 1e-6;

/// Constraint gain `f(θ) = offset + cos_sq · cos²θ`, tying `v_φ = f(θ) v_θ`.
///
/// The default is `π + cos²θ`; `offset = cos_sq = 0` gives a planar pendulum.
/// Every gain of this form satisfies `f(0) = f(π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintGain {
    pub offset: f64,
    pub cos_sq: f64,
}

impl Default for ConstraintGain {
    fn default() -> Self {
        Self {
            offset: PI,
            cos_sq: 1.0,
        }
    }
}

impl ConstraintGain {
    pub const ZERO: Self = Self {
        offset: 0.0,
        cos_sq: 0.0,
    };

    pub fn eval(&self, theta: f64) -> f64 {
        let c = theta.cos();
        self.offset + self.cos_sq * c * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    pub mass: f64,
    pub gravity: f64,
    pub length: f64,
    /// Cylinder radius, `0 < radius < length`.
    pub radius: f64,
    #[serde(default)]
    pub gain: ConstraintGain,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
            length: 2.0,
            radius: 1.5,
            gain: ConstraintGain::default(),
        }
    }
}

/// Spherical pendulum with the nonholonomic constraint `v_φ = f(θ) v_θ`,
/// swinging inside a vertical cylinder. Coordinates `(θ, φ)`.
///
/// `L = ½mℓ²(v_θ² + v_φ² sin²θ) − m g ℓ cos θ`, constraint one-form
/// `ω¹ = f(θ) dθ − dφ`. The bob's distance from the cylinder axis is
/// `ℓ|sin θ|`, so the gap is `c = R − ℓ|sin θ|`; trajectories cross the
/// bottom pole `θ = π` into `sin θ < 0`, where this is the same wall seen from
/// the other side of the chart. The boundary basis is `∂_φ` and the projection
/// keeps `v_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pendulum {
    params: PendulumParams,
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Result<Self, ModelError> {
        require_positive("mass", params.mass)?;
        require_non_negative("gravity", params.gravity)?;
        require_positive("length", params.length)?;
        require_positive("radius", params.radius)?;
        if params.radius >= params.length {
            return Err(ModelError {
                name: "radius",
                reason: format!(
                    "must be smaller than the length {} for the wall to be reachable",
                    params.length
                ),
            });
        }
        if !(params.gain.offset.is_finite() && params.gain.cos_sq.is_finite()) {
            return Err(ModelError {
                name: "gain",
                reason: "coefficients must be finite".into(),
            });
        }
        Ok(Self { params })
    }

    pub fn params_ref(&self) -> &PendulumParams {
        &self.params
    }

    pub fn gain(&self, theta: f64) -> f64 {
        self.params.gain.eval(theta)
    }

    /// Polar angles in `(0, π)` where the bob touches the wall. The other
    /// contacts are these shifted by `π`.
    pub fn contact_angles(&self) -> (f64, f64) {
        let a = (self.params.radius / self.params.length).asin();
        (a, PI - a)
    }

    fn inertia(&self) -> f64 {
        self.params.mass * self.params.length * self.params.length
    }
}

impl MechanicalModel for Pendulum {
    fn dim(&self) -> usize {
        2
    }

    fn constraint_count(&self) -> usize {
        1
    }

    fn coordinate_names(&self) -> Vec<String> {
        vec!["theta".into(), "phi".into()]
    }

    fn lagrangian(&self, q: &Vector, v: &Vector) -> f64 {
        let s = q[0].sin();
        0.5 * self.inertia() * (v[0] * v[0] + v[1] * v[1] * s * s)
            - self.params.mass * self.params.gravity * self.params.length * q[0].cos()
    }

    fn dl_dq(&self, q: &Vector, v: &Vector) -> Vector {
        let (s, c) = q[0].sin_cos();
        let d_theta = self.inertia() * v[1] * v[1] * s * c
            + self.params.mass * self.params.gravity * self.params.length * s;
        Vector::from_column_slice(&[d_theta, 0.0])
    }

    fn dl_dv(&self, q: &Vector, v: &Vector) -> Vector {
        let s = q[0].sin();
        let i = self.inertia();
        Vector::from_column_slice(&[i * v[0], i * s * s * v[1]])
    }

    fn omega(&self, q: &Vector) -> Matrix {
        Matrix::from_row_slice(1, 2, &[self.gain(q[0]), -1.0])
    }

    fn boundary_gap(&self, q: &Vector) -> f64 {
        self.params.radius - self.params.length * q[0].sin().abs()
    }

    fn boundary_gap_grad(&self, q: &Vector) -> Vector {
        Vector::from_column_slice(&[-self.params.length * q[0].sin().signum() * q[0].cos(), 0.0])
    }

    fn tangent_basis(&self, _q: &Vector) -> Result<Matrix, GeometryError> {
        Ok(Matrix::from_column_slice(2, 1, &[0.0, 1.0]))
    }

    fn projection(&self, _q: &Vector) -> Result<Matrix, GeometryError> {
        Ok(Matrix::from_row_slice(1, 2, &[0.0, 1.0]))
    }

    fn params(&self) -> Vec<(String, f64)> {
        vec![
            ("mass".into(), self.params.mass),
            ("gravity".into(), self.params.gravity),
            ("length".into(), self.params.length),
            ("radius".into(), self.params.radius),
            ("gain_offset".into(), self.params.gain.offset),
            ("gain_cos_sq".into(), self.params.gain.cos_sq),
        ]
    }

    fn check_configuration(&self, q: &Vector) -> Result<(), GeometryError> {
        let sin_theta = q[0].sin();
        if sin_theta.abs() < POLE_TOL {
            return Err(GeometryError::PoleSingularity { sin_theta });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_frame;
    use std::f64::consts::FRAC_PI_2;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn model() -> Pendulum {
        Pendulum::new(PendulumParams::default()).unwrap()
    }

    #[test]
    fn lagrangian_value() {
        let l = model().lagrangian(&v(&[FRAC_PI_2, 0.0]), &v(&[1.0, 0.5]));
        assert!((l - 2.5).abs() < 1e-14);
    }

    #[test]
    fn gap_value() {
        let gap = model().boundary_gap(&v(&[0.25 * PI, 123.0]));
        assert!((gap - (1.5 - 2.0 * (0.25 * PI).sin())).abs() < 1e-15);
        assert!((gap - 0.08579).abs() < 1e-5);
    }

    #[test]
    fn omega_annihilates_constraint_direction() {
        let m = model();
        for i in 0..100 {
            let theta = -5.0 + 0.1 * i as f64;
            let q = v(&[theta, 0.7]);
            let dir = v(&[1.0, m.gain(theta)]);
            assert_eq!((m.omega(&q) * dir)[0], 0.0);
        }
        assert_eq!(m.gain(FRAC_PI_2), PI);
    }

    #[test]
    fn default_gain_is_pi_periodic_at_ends() {
        let g = ConstraintGain::default();
        assert!((g.eval(0.0) - (PI + 1.0)).abs() < 1e-15);
        assert!((g.eval(PI) - g.eval(0.0)).abs() < 1e-15);
    }

    #[test]
    fn both_wall_components_are_signed() {
        let m = model();
        let (lo, hi) = m.contact_angles();
        assert!((lo - 0.75f64.asin()).abs() < 1e-15);
        for theta in [lo, hi] {
            assert!(m.boundary_gap(&v(&[theta, 0.0])).abs() < 1e-15);
            // Moving away from the equator is inside, towards it is through the wall.
            let outward = (theta - FRAC_PI_2).signum();
            assert!(m.boundary_gap(&v(&[theta + 1e-3 * outward, 0.0])) > 0.0);
            assert!(m.boundary_gap(&v(&[theta - 1e-3 * outward, 0.0])) < 0.0);
        }
        // Past the bottom pole the same wall appears at π + asin(R/ℓ).
        for theta in [PI + lo, 2.0 * PI - lo] {
            assert!(m.boundary_gap(&v(&[theta, 0.0])).abs() < 1e-15);
            let outward = (theta - 1.5 * PI).signum();
            assert!(m.boundary_gap(&v(&[theta + 1e-3 * outward, 0.0])) > 0.0);
            assert!(m.boundary_gap(&v(&[theta - 1e-3 * outward, 0.0])) < 0.0);
        }
        // Near the bottom (θ → π) the bob is well inside.
        assert!(m.boundary_gap(&v(&[0.95 * PI, 0.0])) > 0.0);
        assert!(m.boundary_gap(&v(&[0.05 * PI, 0.0])) > 0.0);
        assert!(m.boundary_gap(&v(&[FRAC_PI_2, 0.0])) < 0.0);
        assert!(m.boundary_gap(&v(&[1.5 * PI, 0.0])) < 0.0);
    }

    #[test]
    fn gap_gradient_matches_differences() {
        let m = model();
        for theta in [0.3, 1.2, 2.5, 3.5, 4.4, 5.9] {
            let q = v(&[theta, 0.2]);
            let step = 1e-6;
            let fd = (m.boundary_gap(&v(&[theta + step, 0.2])) - m.boundary_gap(&v(&[theta - step, 0.2]))) / (2.0 * step);
            assert!((m.boundary_gap_grad(&q)[0] - fd).abs() < 1e-8, "θ = {theta}");
        }
    }

    #[test]
    fn frame_on_the_wall() {
        let m = model();
        let (_, hi) = m.contact_angles();
        let frame = boundary_frame(&m, &v(&[hi, 0.4])).unwrap();
        assert_eq!(frame.tangent, Matrix::from_column_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(frame.projection, Matrix::from_row_slice(1, 2, &[0.0, 1.0]));
        assert_eq!((&frame.projection * &frame.tangent)[(0, 0)], 1.0);
    }

    #[test]
    fn pole_guard() {
        let m = model();
        assert!(m.check_configuration(&v(&[PI, 0.0])).is_err());
        assert!(m.check_configuration(&v(&[0.75 * PI, 0.0])).is_ok());
    }

    #[test]
    fn initial_state_is_admissible() {
        let gap = model().boundary_gap(&v(&[0.75 * PI, 0.0]));
        assert!((gap - (1.5 - 2.0 * (0.75 * PI).sin())).abs() < 1e-15);
        assert!(gap > 0.0);
    }

    #[test]
    fn radius_must_be_inside_length() {
        let err = Pendulum::new(PendulumParams {
            radius: 2.0,
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.name, "radius");
    }
}
