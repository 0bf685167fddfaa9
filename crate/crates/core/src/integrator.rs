//! Forward variational integration with elastic impacts.
//!
//! A smooth step from `(q_k, v_k, p_k)` sets `p_{k+1} = D₂L_d(q_k, v_k, h)`,
//! `q_{k+1} = v_k`, and solves
//!
//! ```text
//! D₁L_d(q_{k+1}, v_{k+1}, h) + p_{k+1} = Σ λ_μ ω^μ(q_{k+1})
//! ω_{d+}(q_{k+1}, v_{k+1}) = 0
//! ```
//!
//! for `(v_{k+1}, λ)`. When `q_{k+1} = v_k` leaves the admissible set the step
//! is discarded and replaced by a four-phase impact resolution:
//!
//! * A: find the impact fraction `α` and contact point `q̃` from the
//!   constrained step over `αh` with `c(q̃) = 0`;
//! * B: find the post-impact slot `ṽ` matching the discrete energy across the
//!   impact, with the boundary-tangential momentum carried through `p̃`;
//! * C: `p_{k+1} = D₂L_d(q̃, ṽ, (1−α)h)`, `q_{k+1} = ṽ`;
//! * D: the usual constrained solve for `v_{k+1}` over a full step.
//!
//! The boundary momentum `p̃` must satisfy `Pᵀp̃ = D₂L_d(q_k, q̃, αh)`, which
//! has more equations than unknowns. [`BoundaryMomentum`] selects how it is
//! resolved; the mismatch is recorded as `compat_residual`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{initial_discretize, omega_dplus, omega_dminus, DiscreteLagrangian, DiscretizationError};
use crate::geometry::{boundary_frame, pullback_cotangent, push_cotangent, GeometryError, MechanicalModel};
use crate::numerics::{fd_jacobian, inf_norm, newton_solve, NewtonOptions, NewtonResult, NumericsError, Vector};

/// States with `c(q) ≥ −GRAZING_TOL` count as admissible.
pub const GRAZING_TOL: f64 = 1e-12;
/// `α` must lie in `(ALPHA_MARGIN, 1 − ALPHA_MARGIN)`.
pub const ALPHA_MARGIN: f64 = 1e-6;

/// One node of the discrete trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct State {
    pub k: usize,
    pub t: f64,
    pub q: Vector,
    /// The `v` slot: the configuration proposed for the next node.
    pub v: Vector,
    pub p: Vector,
    pub lambda: Vector,
}

/// A resolved collision inside step `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactEvent {
    pub k: usize,
    pub alpha: f64,
    pub t_impact: f64,
    pub q_tilde: Vector,
    pub v_tilde: Vector,
    /// Boundary covector, coefficients against the dual tangent basis.
    pub p_tilde: Vector,
    pub lambda_a: Vector,
    pub lambda_b: Vector,
    /// `‖Pᵀp̃ − D₂L_d(q_k, q̃, αh)‖∞`: the normal momentum absorbed by the wall.
    pub compat_residual: f64,
    /// `|D₃L_d(q_k, q̃, αh) − D₃L_d(q̃, ṽ, (1−α)h)|`.
    pub energy_jump: f64,
    /// Discrete energy of the pre-impact substep.
    pub energy_before: f64,
    /// Discrete energy of the post-impact substep.
    pub energy_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Smooth,
    Impact,
}

/// Solver bookkeeping for the step that produced state `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepStats {
    pub k: usize,
    pub kind: StepKind,
    /// Newton iterations, summed over phases for impact steps.
    pub iterations: usize,
    /// Largest final residual ∞-norm over the phases of the step.
    pub residual_norm: f64,
    /// `‖ω_{d+}(q_k, v_k)‖∞` of the produced state.
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub h: f64,
    pub states: Vec<State>,
    pub impacts: Vec<ImpactEvent>,
    pub solver_stats: Vec<StepStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Smooth,
    Backward,
    ImpactTime,
    ImpactReflection,
    PostImpact,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Smooth => "smooth step",
            Phase::Backward => "backward step",
            Phase::ImpactTime => "impact phase A",
            Phase::ImpactReflection => "impact phase B",
            Phase::PostImpact => "impact phase D",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum IntegratorError {
    #[error("Newton failure in {phase} at step {k} (t = {t}): {source}")]
    NewtonFailure {
        phase: Phase,
        k: usize,
        t: f64,
        source: NumericsError,
    },
    #[error("impact fraction α = {alpha} out of range at step {k} (t = {t})")]
    AlphaOutOfRange { k: usize, t: f64, alpha: f64 },
    #[error("state still outside the admissible set after impact resolution at step {k} (t = {t}, gap {gap:e})")]
    PersistentPenetration { k: usize, t: f64, gap: f64 },
    #[error("no reflecting post-impact root at step {k} (t = {t}); normal rate {normal_rate:e}")]
    RootSelectionAmbiguous { k: usize, t: f64, normal_rate: f64 },
    #[error("boundary geometry failure at step {k} (t = {t}): {source}")]
    Geometry { k: usize, t: f64, source: GeometryError },
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error("invalid simulation setup: {reason}")]
    InvalidSetup { reason: String },
}

/// How the boundary momentum `p̃` is obtained from the pre-impact momentum
/// `p⁻ = D₂L_d(q_k, q̃, αh)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMomentum {
    /// Least-squares solution of `Pᵀp̃ = p⁻`: `p̃ = (PPᵀ)⁻¹P p⁻`.
    #[default]
    LeastSquares,
    /// Restriction to the boundary: `p̃ = Eᵀp⁻`. Conserves `p⁻` on every
    /// boundary tangent vector.
    Pullback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub newton: NewtonOptions,
    pub grazing_tol: f64,
    pub boundary_momentum: BoundaryMomentum,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            grazing_tol: GRAZING_TOL,
            boundary_momentum: BoundaryMomentum::default(),
        }
    }
}

/// Result of a single solve, with its stats.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: State,
    pub stats: StepStats,
}

/// Output of [`step_minus`].
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardStep {
    pub q_prev: Vector,
    pub p_prev: Vector,
    pub v_slot: Vector,
    pub lambda: Vector,
}

/// Output of [`resolve_impact`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactResolution {
    pub event: ImpactEvent,
    pub state: State,
    pub stats: StepStats,
}

/// Multiple of `ε·max_i Σ_j |J_ij x_j|` below which a residual is treated as
/// evaluation roundoff.
const ROUNDOFF_FLOOR_FACTOR: f64 = 16.0;

/// Newton solve that also accepts an iterate stalled at the roundoff floor of
/// the residual.
///
/// Substep systems scale like `1/(αh)`, so for short substeps one ulp of the
/// unknown configuration can move the residual by more than `tol`. Such an
/// iterate is returned with `converged = false` and its true residual.
fn solve_phase<F>(f: F, x0: &Vector, opts: &NewtonOptions) -> Result<NewtonResult, NumericsError>
where
    F: Fn(&Vector) -> Vector,
{
    match newton_solve(&f, x0, opts) {
        Err(NumericsError::NonConvergence {
            x,
            residual_norm,
            iterations,
        }) => {
            let x = Vector::from_vec(x);
            let jac = fd_jacobian(&f, &x, opts.fd_eps)?;
            let floor = ROUNDOFF_FLOOR_FACTOR
                * f64::EPSILON
                * jac
                    .row_iter()
                    .map(|row| row.iter().zip(x.iter()).map(|(j, xj)| (j * xj).abs()).sum::<f64>())
                    .fold(0.0, f64::max);
            if residual_norm <= floor {
                log::debug!("accepting residual {residual_norm:e} at roundoff floor {floor:e}");
                Ok(NewtonResult {
                    x,
                    residual_norm,
                    iterations,
                    converged: false,
                })
            } else {
                Err(NumericsError::NonConvergence {
                    x: x.iter().copied().collect(),
                    residual_norm,
                    iterations,
                })
            }
        }
        other => other,
    }
}

fn split(x: &Vector, n: usize) -> (Vector, Vector) {
    (x.rows(0, n).clone_owned(), x.rows(n, x.len() - n).clone_owned())
}

fn stack(parts: &[&[f64]]) -> Vector {
    Vector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

/// Solve the implicit block of a smooth step at a known `(q, p)`:
/// `D₁L_d(q, v, h) + p = ωᵀ(q)λ`, `ω_{d+}(q, v) = 0`.
fn solve_constrained<M: MechanicalModel + ?Sized>(
    ld: &DiscreteLagrangian<'_, M>,
    q: &Vector,
    p: &Vector,
    h: f64,
    v_guess: &Vector,
    lambda_guess: &Vector,
    opts: &NewtonOptions,
) -> Result<(Vector, Vector, NewtonResult), NumericsError> {
    let model = ld.model();
    let n = model.dim();
    let omega_t = model.omega(q).transpose();
    let residual = |x: &Vector| {
        let (v, lambda) = split(x, n);
        let momentum = ld.d1(q, &v, h) + p - &omega_t * &lambda;
        let constraint = omega_dplus(model, q, &v, h);
        stack(&[momentum.as_slice(), constraint.as_slice()])
    };
    let x0 = stack(&[v_guess.as_slice(), lambda_guess.as_slice()]);
    let result = solve_phase(residual, &x0, opts)?;
    let (v, lambda) = split(&result.x, n);
    Ok((v, lambda, result))
}

/// One smooth forward step from `state` over `h`.
pub fn step_plus<M: MechanicalModel + ?Sized>(
    ld: &DiscreteLagrangian<'_, M>,
    state: &State,
    h: f64,
    opts: &NewtonOptions,
) -> Result<Step, IntegratorError> {
    let p_next = ld.d2(&state.q, &state.v, h);
    let q_next = state.v.clone();
    let guess = &q_next * 2.0 - &state.q;
    let k = state.k + 1;
    let t = state.t + h;
    let (v_next, lambda, result) = solve_constrained(ld, &q_next, &p_next, h, &guess, &state.lambda, opts)
        .map_err(|source| IntegratorError::NewtonFailure {
            phase: Phase::Smooth,
            k,
            t,
            source,
        })?;
    let constraint_residual = inf_norm(&omega_dplus(ld.model(), &q_next, &v_next, h));
    Ok(Step {
        state: State {
            k,
            t,
            q: q_next,
            v: v_next,
            p: p_next,
            lambda,
        },
        stats: StepStats {
            k,
            kind: StepKind::Smooth,
            iterations: result.iterations,
            residual_norm: result.residual_norm,
            constraint_residual,
        },
    })
}

/// One backward step: recover `(q_k, p_k)` from `(q_{k+1}, p_{k+1})`.
///
/// Solves `p_{k+1} − D₂L_d(v, q_{k+1}, h) = ωᵀ(q_{k+1})λ` and
/// `ω_{d−}(v, q_{k+1}) = 0` for `(v, λ)`, then `q_k = v`,
/// `p_k = −D₁L_d(v, q_{k+1}, h)`.
pub fn step_minus<M: MechanicalModel + ?Sized>(
    ld: &DiscreteLagrangian<'_, M>,
    q_next: &Vector,
    p_next: &Vector,
    h: f64,
    opts: &NewtonOptions,
) -> Result<BackwardStep, IntegratorError> {
    let model = ld.model();
    let n = model.dim();
    let omega_t = model.omega(q_next).transpose();
    let residual = |x: &Vector| {
        let (v, lambda) = split(x, n);
        let momentum = p_next - ld.d2(&v, q_next, h) - &omega_t * &lambda;
        let constraint = omega_dminus(model, &v, q_next, h);
        stack(&[momentum.as_slice(), constraint.as_slice()])
    };
    let x0 = stack(&[q_next.as_slice(), &vec![0.0; model.constraint_count()]]);
    let result = solve_phase(residual, &x0, opts).map_err(|source| IntegratorError::NewtonFailure {
        phase: Phase::Backward,
        k: 0,
        t: f64::NAN,
        source,
    })?;
    let (v, lambda) = split(&result.x, n);
    let p_prev = -ld.d1(&v, q_next, h);
    Ok(BackwardStep {
        q_prev: v.clone(),
        p_prev,
        v_slot: v,
        lambda,
    })
}

/// Candidate starting points for the post-impact slot, best first.
///
/// The pre-impact discrete velocity is reflected through the wall with the
/// Euclidean unit normal. When velocity constraints tie the tangential motion
/// to the normal motion that guess can lead Newton to the transmitted root,
/// so the full reversal `−w` (which satisfies any linear constraint) comes
/// next, followed by rescaled reflections.
fn reflection_guesses(q_tilde: &Vector, w: &Vector, normal: &Vector, sub_h: f64) -> Vec<Vector> {
    let unit = normal / normal.norm();
    let w_n = unit.dot(w);
    let tangential = w - &unit * w_n;
    let rate = w_n.abs().max(1e-3 * w.norm()).max(f64::EPSILON);
    let reflected = |scale: f64| q_tilde + (&tangential + &unit * (scale * rate)) * sub_h;
    vec![
        reflected(1.0),
        q_tilde - w * sub_h,
        reflected(2.0),
        reflected(0.5),
        reflected(4.0),
    ]
}

/// Resolve an elastic impact inside step `k`, given the interior node
/// `(q_k, p_k)` and the rejected next configuration.
#[allow(clippy::too_many_arguments)]
pub fn resolve_impact<M: MechanicalModel + ?Sized>(
    ld: &DiscreteLagrangian<'_, M>,
    k: usize,
    t_k: f64,
    q_k: &Vector,
    p_k: &Vector,
    h: f64,
    rejected_q: &Vector,
    opts: &SimOptions,
) -> Result<ImpactResolution, IntegratorError> {
    let model = ld.model();
    let n = model.dim();
    let m = model.constraint_count();
    let newton = &opts.newton;
    let geometry_err = |source| IntegratorError::Geometry { k, t: t_k, source };

    // Phase A: (α, q̃, λ_A).
    let gap_k = model.boundary_gap(q_k);
    let gap_rejected = model.boundary_gap(rejected_q);
    let alpha0 = gap_k / (gap_k - gap_rejected);
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(IntegratorError::AlphaOutOfRange { k, t: t_k, alpha: alpha0 });
    }
    let omega_k_t = model.omega(q_k).transpose();
    let phase_a = |x: &Vector| {
        let alpha = x[0];
        let v = x.rows(1, n).clone_owned();
        let lambda = x.rows(1 + n, m).clone_owned();
        let sub_h = alpha * h;
        let momentum = ld.d1(q_k, &v, sub_h) + p_k - &omega_k_t * &lambda;
        let constraint = omega_dplus(model, q_k, &v, sub_h);
        let gap = [model.boundary_gap(&v)];
        stack(&[&[momentum.as_slice(), constraint.as_slice()].concat(), &gap])
    };
    let v0 = q_k + (rejected_q - q_k) * alpha0;
    let x0 = stack(&[&[alpha0], v0.as_slice(), &vec![0.0; m]]);
    let result_a = solve_phase(phase_a, &x0, newton).map_err(|source| IntegratorError::NewtonFailure {
        phase: Phase::ImpactTime,
        k,
        t: t_k,
        source,
    })?;
    let alpha = result_a.x[0];
    if !(alpha > ALPHA_MARGIN && alpha < 1.0 - ALPHA_MARGIN) {
        return Err(IntegratorError::AlphaOutOfRange { k, t: t_k, alpha });
    }
    let q_tilde = result_a.x.rows(1, n).clone_owned();
    let lambda_a = result_a.x.rows(1 + n, m).clone_owned();
    let pre_h = alpha * h;
    let post_h = (1.0 - alpha) * h;
    let t_impact = t_k + pre_h;

    // Phase B: (ṽ, λ_B) with p̃ assigned from the pre-impact momentum.
    let frame = boundary_frame(model, &q_tilde).map_err(geometry_err)?;
    let pre = ld.partials(q_k, &q_tilde, pre_h);
    let p_tilde = match opts.boundary_momentum {
        BoundaryMomentum::Pullback => pullback_cotangent(&frame, &pre.d2).map_err(geometry_err)?,
        BoundaryMomentum::LeastSquares => {
            let gram = &frame.projection * frame.projection.transpose();
            gram.lu().solve(&(&frame.projection * &pre.d2)).ok_or_else(|| {
                geometry_err(GeometryError::DegenerateFrame {
                    reason: "projection rows are linearly dependent".into(),
                })
            })?
        }
    };
    let compat_residual = inf_norm(&(push_cotangent(&frame, &p_tilde).map_err(geometry_err)? - &pre.d2));
    let omega_tilde_t = model.omega(&q_tilde).transpose();
    let tangent_t = frame.tangent.transpose();
    let phase_b = |x: &Vector| {
        let (v, lambda) = split(x, n);
        let post = ld.partials(&q_tilde, &v, post_h);
        let energy = [pre.d3 - post.d3];
        let tangential = &tangent_t * (post.d1 - &omega_tilde_t * &lambda) + &p_tilde;
        let constraint = omega_dplus(model, &q_tilde, &v, post_h);
        stack(&[&energy, tangential.as_slice(), constraint.as_slice()])
    };

    let w_pre = (&q_tilde - q_k) / pre_h;
    let mut best_rate = f64::NEG_INFINITY;
    let mut penetration = None;
    let mut accepted = None;
    let mut last_failure = None;
    for guess in reflection_guesses(&q_tilde, &w_pre, &frame.normal, post_h) {
        let x0 = stack(&[guess.as_slice(), &vec![0.0; m]]);
        let result = match solve_phase(phase_b, &x0, newton) {
            Ok(r) => r,
            Err(e) => {
                last_failure = Some(e);
                continue;
            }
        };
        let (v_tilde, lambda_b) = split(&result.x, n);
        let rate = frame.normal.dot(&(&v_tilde - &q_tilde));
        best_rate = best_rate.max(rate);
        if rate <= 0.0 {
            continue;
        }
        let gap = model.boundary_gap(&v_tilde);
        if gap < -opts.grazing_tol {
            penetration.get_or_insert(gap);
            continue;
        }
        accepted = Some((v_tilde, lambda_b, result));
        break;
    }
    let (v_tilde, lambda_b, result_b) = match accepted {
        Some(found) => found,
        None => {
            if let Some(gap) = penetration {
                return Err(IntegratorError::PersistentPenetration { k, t: t_k, gap });
            }
            if best_rate.is_finite() {
                return Err(IntegratorError::RootSelectionAmbiguous {
                    k,
                    t: t_k,
                    normal_rate: best_rate,
                });
            }
            return Err(IntegratorError::NewtonFailure {
                phase: Phase::ImpactReflection,
                k,
                t: t_k,
                source: last_failure.unwrap_or(NumericsError::NonFiniteStart),
            });
        }
    };
    let post = ld.partials(&q_tilde, &v_tilde, post_h);
    let energy_jump = (pre.d3 - post.d3).abs();

    // Phase C.
    let q_next = v_tilde.clone();
    let p_next = post.d2;

    // Phase D.
    let guess = &q_next + (&v_tilde - &q_tilde) * (h / post_h);
    let (v_next, lambda_next, result_d) = solve_constrained(ld, &q_next, &p_next, h, &guess, &lambda_b, newton)
        .map_err(|source| IntegratorError::NewtonFailure {
            phase: Phase::PostImpact,
            k: k + 1,
            t: t_k + h,
            source,
        })?;

    log::debug!(
        "impact at step {k}: alpha = {alpha:.6}, t = {t_impact:.6}, energy jump = {energy_jump:e}, compat = {compat_residual:e}"
    );

    let event = ImpactEvent {
        k,
        alpha,
        t_impact,
        q_tilde,
        v_tilde,
        p_tilde,
        lambda_a,
        lambda_b,
        compat_residual,
        energy_jump,
        energy_before: -pre.d3,
        energy_after: -post.d3,
    };
    let constraint_residual = inf_norm(&omega_dplus(model, &q_next, &v_next, h));
    let stats = StepStats {
        k: k + 1,
        kind: StepKind::Impact,
        iterations: result_a.iterations + result_b.iterations + result_d.iterations,
        residual_norm: result_a
            .residual_norm
            .max(result_b.residual_norm)
            .max(result_d.residual_norm),
        constraint_residual,
    };
    let state = State {
        k: k + 1,
        t: t_k + h,
        q: q_next,
        v: v_next,
        p: p_next,
        lambda: lambda_next,
    };
    Ok(ImpactResolution { event, state, stats })
}

/// Integrate from the continuous initial condition `(q0, v0)` over `[t0, t_final]`.
///
/// Runs `N = round((t_final − t0)/h)` steps. A step whose next configuration
/// leaves the admissible set is replaced by an impact resolution; at most one
/// impact is resolved per step.
#[allow(clippy::too_many_arguments)]
pub fn simulate<M: MechanicalModel + ?Sized>(
    ld: &DiscreteLagrangian<'_, M>,
    q0: &Vector,
    v0: &Vector,
    t0: f64,
    t_final: f64,
    h: f64,
    opts: &SimOptions,
) -> Result<Trajectory, IntegratorError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(IntegratorError::InvalidSetup {
            reason: format!("timestep must be positive, got {h}"),
        });
    }
    if !(t_final > t0) {
        return Err(IntegratorError::InvalidSetup {
            reason: format!("final time {t_final} must exceed initial time {t0}"),
        });
    }
    let steps = ((t_final - t0) / h).round();
    if steps < 1.0 {
        return Err(IntegratorError::InvalidSetup {
            reason: "interval shorter than one timestep".into(),
        });
    }
    let steps = steps as usize;
    opts.newton
        .validate()
        .map_err(|reason| IntegratorError::InvalidSetup { reason })?;

    let model = ld.model();
    let init = initial_discretize(model, ld.rule(), q0, v0, h)?;
    let first = State {
        k: 0,
        t: t0,
        q: init.q,
        v: init.v,
        p: init.p,
        lambda: Vector::zeros(model.constraint_count()),
    };
    let first_stats = StepStats {
        k: 0,
        kind: StepKind::Smooth,
        iterations: 0,
        residual_norm: 0.0,
        constraint_residual: inf_norm(&omega_dplus(model, &first.q, &first.v, h)),
    };

    let mut states = Vec::with_capacity(steps + 1);
    let mut impacts = Vec::new();
    let mut solver_stats = Vec::with_capacity(steps + 1);
    states.push(first);
    solver_stats.push(first_stats);

    for k in 0..steps {
        let current = &states[k];
        let t_next = t0 + (k + 1) as f64 * h;
        let (mut state, stats) = if model.boundary_gap(&current.v) < -opts.grazing_tol {
            let resolved = resolve_impact(ld, k, current.t, &current.q, &current.p, h, &current.v, opts)?;
            impacts.push(resolved.event);
            (resolved.state, resolved.stats)
        } else {
            let step = step_plus(ld, current, h, &opts.newton)?;
            (step.state, step.stats)
        };
        state.t = t_next;
        states.push(state);
        solver_stats.push(stats);
    }

    Ok(Trajectory {
        h,
        states,
        impacts,
        solver_stats,
    })
}
