//! Discrete Lagrangians, discrete constraint maps and discrete energy.
//!
//! Both rules use the chart retraction `R_q(w) = q + h·w`, whose inverse turns
//! a configuration pair into the discrete velocity `w = (v − q)/h`:
//!
//! * midpoint: `L_d(q, v, h) = h·L((q + v)/2, w)`
//! * retraction-left: `L_d(q, v, h) = h·L(q, w)`
//!
//! Partial derivatives are assembled from the model's analytic `∂L/∂q`,
//! `∂L/∂v` by the chain rule. For both rules `D₃L_d = L − ∂L/∂v · w` at the
//! rule's base point, so `−D₃L_d` is the continuous energy evaluated there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, MechanicalModel};
use crate::numerics::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Midpoint,
    RetractionLeft,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rule::Midpoint => "midpoint",
            Rule::RetractionLeft => "retraction-left",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum DiscretizationError {
    #[error("invalid initial state: {reason}")]
    InvalidInitialState { reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `L_d(q, v, h)` with its partial derivatives.
pub struct DiscreteLagrangian<'a, M: ?Sized> {
    model: &'a M,
    rule: Rule,
}

impl<M: ?Sized> Clone for DiscreteLagrangian<'_, M> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<M: ?Sized> Copy for DiscreteLagrangian<'_, M> {}

/// The three partial derivatives at one point, sharing model evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials {
    pub d1: Vector,
    pub d2: Vector,
    pub d3: f64,
}

impl<'a, M: MechanicalModel + ?Sized> DiscreteLagrangian<'a, M> {
    pub fn new(model: &'a M, rule: Rule) -> Self {
        Self { model, rule }
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    fn base_and_velocity(&self, q: &Vector, v: &Vector, h: f64) -> (Vector, Vector) {
        let w = (v - q) / h;
        let base = match self.rule {
            Rule::Midpoint => (q + v) * 0.5,
            Rule::RetractionLeft => q.clone(),
        };
        (base, w)
    }

    pub fn eval(&self, q: &Vector, v: &Vector, h: f64) -> f64 {
        let (base, w) = self.base_and_velocity(q, v, h);
        h * self.model.lagrangian(&base, &w)
    }

    pub fn partials(&self, q: &Vector, v: &Vector, h: f64) -> Partials {
        let (base, w) = self.base_and_velocity(q, v, h);
        let l_q = self.model.dl_dq(&base, &w);
        let l_v = self.model.dl_dv(&base, &w);
        let d3 = self.model.lagrangian(&base, &w) - l_v.dot(&w);
        let (d1, d2) = match self.rule {
            Rule::Midpoint => {
                let half = &l_q * (0.5 * h);
                (&half - &l_v, half + l_v)
            }
            Rule::RetractionLeft => (&l_q * h - &l_v, l_v),
        };
        Partials { d1, d2, d3 }
    }

    pub fn d1(&self, q: &Vector, v: &Vector, h: f64) -> Vector {
        let (base, w) = self.base_and_velocity(q, v, h);
        let l_q = self.model.dl_dq(&base, &w);
        let l_v = self.model.dl_dv(&base, &w);
        match self.rule {
            Rule::Midpoint => l_q * (0.5 * h) - l_v,
            Rule::RetractionLeft => l_q * h - l_v,
        }
    }

    pub fn d2(&self, q: &Vector, v: &Vector, h: f64) -> Vector {
        let (base, w) = self.base_and_velocity(q, v, h);
        let l_v = self.model.dl_dv(&base, &w);
        match self.rule {
            Rule::Midpoint => self.model.dl_dq(&base, &w) * (0.5 * h) + l_v,
            Rule::RetractionLeft => l_v,
        }
    }

    pub fn d3(&self, q: &Vector, v: &Vector, h: f64) -> f64 {
        let (base, w) = self.base_and_velocity(q, v, h);
        self.model.lagrangian(&base, &w) - self.model.dl_dv(&base, &w).dot(&w)
    }

    /// Discrete energy `−D₃L_d(q, v, h)`.
    pub fn energy(&self, q: &Vector, v: &Vector, h: f64) -> f64 {
        -self.d3(q, v, h)
    }
}

/// `ω_{d+}(q, v) = ω_q(R_q⁻¹(v))`, one entry per constraint.
pub fn omega_dplus<M: MechanicalModel + ?Sized>(model: &M, q: &Vector, v: &Vector, h: f64) -> Vector {
    model.omega(q) * model.retract_inverse(q, v, h)
}

/// `ω_{d−}(v, q) = −ω_q(R_q⁻¹(v))`.
pub fn omega_dminus<M: MechanicalModel + ?Sized>(model: &M, v: &Vector, q: &Vector, h: f64) -> Vector {
    -(model.omega(q) * model.retract_inverse(q, v, h))
}

pub fn discrete_energy<M: MechanicalModel + ?Sized>(ld: &DiscreteLagrangian<'_, M>, q: &Vector, v: &Vector, h: f64) -> f64 {
    ld.energy(q, v, h)
}

/// First node of a discrete trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInitialState {
    pub q: Vector,
    pub v: Vector,
    pub p: Vector,
}

/// Convert a continuous initial condition `(q(0), q̇(0))` into `(q₀, v₀, p₀)`.
///
/// Midpoint: `q₀ = q(0) − (h/2)q̇(0)`, `v₀ = q(0) + (h/2)q̇(0)`.
/// Retraction-left: `q₀ = q(0)`, `v₀ = q(0) + h·q̇(0)`.
/// In both cases `p₀ = D₂L_d(q₀, v₀, h)`.
pub fn initial_discretize<M: MechanicalModel + ?Sized>(
    model: &M,
    rule: Rule,
    q0: &Vector,
    v0: &Vector,
    h: f64,
) -> Result<DiscreteInitialState, DiscretizationError> {
    let n = model.dim();
    if q0.len() != n || v0.len() != n {
        return Err(DiscretizationError::InvalidInitialState {
            reason: format!(
                "expected {n} coordinates, got q0 of length {} and v0 of length {}",
                q0.len(),
                v0.len()
            ),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(DiscretizationError::InvalidInitialState {
            reason: format!("timestep must be positive, got {h}"),
        });
    }
    if q0.iter().chain(v0.iter()).any(|x| !x.is_finite()) {
        return Err(DiscretizationError::InvalidInitialState {
            reason: "non-finite initial condition".into(),
        });
    }
    let gap = model.boundary_gap(q0);
    if !(gap > 0.0) {
        return Err(DiscretizationError::InvalidInitialState {
            reason: format!("initial configuration is not interior (gap {gap:e})"),
        });
    }
    model.check_configuration(q0)?;

    let (q, v) = match rule {
        Rule::Midpoint => (q0 - v0 * (0.5 * h), q0 + v0 * (0.5 * h)),
        Rule::RetractionLeft => (q0.clone(), q0 + v0 * h),
    };
    for (label, point) in [("q_0", &q), ("v_0", &v)] {
        let gap = model.boundary_gap(point);
        if gap < 0.0 {
            return Err(DiscretizationError::InvalidInitialState {
                reason: format!("{label} lies outside the admissible set (gap {gap:e})"),
            });
        }
    }
    let p = DiscreteLagrangian::new(model, rule).d2(&q, &v, h);
    Ok(DiscreteInitialState { q, v, p })
}
