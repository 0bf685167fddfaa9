//! Post-hoc analysis of trajectories.
//!
//! Everything here is recomputed from the stored states and the discrete
//! Lagrangian; the solver statistics are only compared against.

use serde::Serialize;
use thiserror::Error;

use crate::discretization::{omega_dplus, DiscreteLagrangian};
use crate::geometry::MechanicalModel;
use crate::integrator::Trajectory;
use crate::numerics::inf_norm;

/// Allowed disagreement between stored and recomputed constraint residuals.
pub const RESIDUAL_AGREEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// `−D₃L_d(q_k, v_k, h)` at a trajectory node.
    Node,
    /// Pre-impact substep `(q_k, q̃)` over `αh`.
    ImpactBefore,
    /// Post-impact substep `(q̃, ṽ)` over `(1−α)h`.
    ImpactAfter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub kind: SampleKind,
}

/// Discrete energy at every node, with two extra samples at each impact
/// time. Sorted by time; impact samples sit between nodes `k` and `k+1`.
pub fn energy_series<M: MechanicalModel + ?Sized>(
    traj: &Trajectory,
    ld: &DiscreteLagrangian<'_, M>,
) -> Vec<EnergySample> {
    let h = traj.h;
    let mut out = Vec::with_capacity(traj.states.len() + 2 * traj.impacts.len());
    let mut impacts = traj.impacts.iter().peekable();
    for state in &traj.states {
        out.push(EnergySample {
            t: state.t,
            energy: ld.energy(&state.q, &state.v, h),
            kind: SampleKind::Node,
        });
        while let Some(event) = impacts.next_if(|e| e.k == state.k) {
            let pre_h = event.alpha * h;
            let post_h = (1.0 - event.alpha) * h;
            let q_k = &state.q;
            out.push(EnergySample {
                t: event.t_impact,
                energy: ld.energy(q_k, &event.q_tilde, pre_h),
                kind: SampleKind::ImpactBefore,
            });
            out.push(EnergySample {
                t: event.t_impact,
                energy: ld.energy(&event.q_tilde, &event.v_tilde, post_h),
                kind: SampleKind::ImpactAfter,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStats {
    pub mean: f64,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub steps: usize,
    pub h: f64,
    pub impact_count: usize,
    pub impact_times: Vec<f64>,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// `max_k |E_k − E_0| / max(1, |E_0|)` over the energy series.
    pub energy_drift_rel: f64,
    /// Largest `|energy_jump|` over impacts, zero without impacts.
    pub max_energy_jump: f64,
    /// Largest normal momentum absorbed at an impact.
    pub max_compat_residual: f64,
    /// `max ‖ω_{d+}‖∞` over states `k ≥ 1` and both substeps of every impact.
    pub max_constraint_residual: f64,
    /// Minimum gap over accepted configurations and contact points.
    pub min_boundary_gap: f64,
    pub newton_iter_stats: IterationStats,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum DiagnosticsError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("stored constraint residual {stored:e} at step {k} disagrees with recomputed {recomputed:e}")]
    ResidualMismatch { k: usize, stored: f64, recomputed: f64 },
}

/// Aggregate a trajectory into a [`RunReport`].
///
/// The initial node is excluded from the constraint residual: its `v` slot
/// comes from the continuous initial velocity, which need not satisfy the
/// constraint.
pub fn build_report<M: MechanicalModel + ?Sized>(
    traj: &Trajectory,
    ld: &DiscreteLagrangian<'_, M>,
) -> Result<RunReport, DiagnosticsError> {
    if traj.states.is_empty() {
        return Err(DiagnosticsError::EmptyTrajectory);
    }
    let model = ld.model();
    let h = traj.h;

    let series = energy_series(traj, ld);
    let energy_initial = series[0].energy;
    let energy_final = series.last().map(|s| s.energy).unwrap_or(energy_initial);
    let scale = energy_initial.abs().max(1.0);
    let energy_drift_rel = series
        .iter()
        .map(|s| (s.energy - energy_initial).abs() / scale)
        .fold(0.0, f64::max);

    let mut max_constraint_residual: f64 = 0.0;
    for (state, stats) in traj.states.iter().zip(&traj.solver_stats).skip(1) {
        let recomputed = inf_norm(&omega_dplus(model, &state.q, &state.v, h));
        if (recomputed - stats.constraint_residual).abs() > RESIDUAL_AGREEMENT_TOL {
            return Err(DiagnosticsError::ResidualMismatch {
                k: state.k,
                stored: stats.constraint_residual,
                recomputed,
            });
        }
        max_constraint_residual = max_constraint_residual.max(recomputed);
    }
    let mut min_boundary_gap = traj
        .states
        .iter()
        .map(|s| model.boundary_gap(&s.q))
        .fold(f64::INFINITY, f64::min);
    for event in &traj.impacts {
        let q_k = &traj.states[event.k].q;
        let pre = omega_dplus(model, q_k, &event.q_tilde, event.alpha * h);
        let post = omega_dplus(model, &event.q_tilde, &event.v_tilde, (1.0 - event.alpha) * h);
        max_constraint_residual = max_constraint_residual.max(inf_norm(&pre)).max(inf_norm(&post));
        min_boundary_gap = min_boundary_gap.min(model.boundary_gap(&event.q_tilde));
    }

    let solves = &traj.solver_stats[1.min(traj.solver_stats.len())..];
    let newton_iter_stats = IterationStats {
        mean: if solves.is_empty() {
            0.0
        } else {
            solves.iter().map(|s| s.iterations as f64).sum::<f64>() / solves.len() as f64
        },
        max: solves.iter().map(|s| s.iterations).max().unwrap_or(0),
    };

    Ok(RunReport {
        steps: traj.states.len() - 1,
        h,
        impact_count: traj.impacts.len(),
        impact_times: traj.impacts.iter().map(|e| e.t_impact).collect(),
        energy_initial,
        energy_final,
        energy_drift_rel,
        max_energy_jump: traj.impacts.iter().map(|e| e.energy_jump).fold(0.0, f64::max),
        max_compat_residual: traj.impacts.iter().map(|e| e.compat_residual).fold(0.0, f64::max),
        max_constraint_residual,
        min_boundary_gap,
        newton_iter_stats,
    })
}
