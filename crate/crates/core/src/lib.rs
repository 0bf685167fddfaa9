//! Variational integrators for nonholonomic mechanical systems with elastic
//! impacts against a one-sided boundary.
//!
//! The pieces fit together as follows: a [`MechanicalModel`] provides the
//! Lagrangian, constraint one-forms and the boundary; a [`DiscreteLagrangian`]
//! turns it into a discrete system under a chosen [`Rule`]; [`simulate`] runs
//! smooth steps and resolves impacts; [`diagnostics`] summarises the result.

pub mod diagnostics;
pub mod discretization;
pub mod geometry;
pub mod integrator;
pub mod models;
pub mod numerics;

pub use diagnostics::{build_report, energy_series, EnergySample, RunReport};
pub use discretization::{
    discrete_energy, initial_discretize, omega_dminus, omega_dplus, DiscreteInitialState, DiscreteLagrangian,
    DiscretizationError, Partials, Rule,
};
pub use geometry::{boundary_frame, pullback_cotangent, push_cotangent, BoundaryFrame, GeometryError, MechanicalModel};
pub use integrator::{
    resolve_impact, simulate, step_minus, step_plus, ImpactEvent, IntegratorError, SimOptions, State, StepKind,
    StepStats, Trajectory, BoundaryMomentum,
};
pub use models::{
    BodyShape, ConstraintGain, ModelError, Particle, ParticleParams, Pendulum, PendulumParams, Se2Body, Se2BodyParams,
};
pub use numerics::{newton_solve, newton_solve_with, Matrix, NewtonOptions, NewtonResult, NumericsError, Vector};
