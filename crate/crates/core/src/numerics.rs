//! Small dense linear algebra, finite-difference Jacobians and a damped
//! Newton root-finder.
//!
//! Every implicit solve in the integrator goes through [`newton_solve`]. The
//! systems involved are tiny (at most `3n + 2m` unknowns), so the solver keeps
//! to dense LU factorizations and a plain backtracking line search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column vector of reals. Used for configurations, momenta and multiplier tuples.
pub type Vector = DVector<f64>;

/// Dense real matrix (Jacobians, boundary frames, constraint one-forms).
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum NumericsError {
    #[error("non-finite function value while perturbing coordinate {coordinate}")]
    EvaluationFailure { coordinate: usize },
    #[error("non-finite function value at the initial guess")]
    NonFiniteStart,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual_norm:e})")]
    NonConvergence {
        x: Vec<f64>,
        residual_norm: f64,
        iterations: usize,
    },
    #[error("singular Jacobian after regularization (iteration {iteration})")]
    SingularJacobian { iteration: usize },
}

/// Knobs for [`newton_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Bound on the residual ∞-norm.
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Relative finite-difference step, scaled by `max(1, |x_j|)`.
    pub fd_eps: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_backtracks: 30,
            fd_eps: 1e-7,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter < 1 {
            return Err("max_iter must be at least 1".into());
        }
        if self.max_backtracks < 1 {
            return Err("max_backtracks must be at least 1".into());
        }
        if !(self.fd_eps > 0.0 && self.fd_eps.is_finite()) {
            return Err(format!("fd_eps must be positive, got {}", self.fd_eps));
        }
        Ok(())
    }
}

/// Outcome of a converged Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub x: Vector,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Induced ∞-norm (maximum absolute row sum).
pub fn matrix_inf_norm(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Central-difference Jacobian of `f` at `x`.
///
/// The step for coordinate `j` is `eps * max(1, |x_j|)`.
pub fn fd_jacobian<F>(f: F, x: &Vector, eps: f64) -> Result<Matrix, NumericsError>
where
    F: Fn(&Vector) -> Vector,
{
    let n = x.len();
    let mut columns = Vec::with_capacity(n);
    let mut probe = x.clone();
    for j in 0..n {
        // Round the step so that x ± step is exact.
        let step = (x[j] + eps * x[j].abs().max(1.0)) - x[j];
        probe[j] = x[j] + step;
        let plus = f(&probe);
        probe[j] = x[j] - step;
        let minus = f(&probe);
        probe[j] = x[j];
        if !all_finite(&plus) || !all_finite(&minus) {
            return Err(NumericsError::EvaluationFailure { coordinate: j });
        }
        columns.push((plus - minus) / (2.0 * step));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(Matrix::from_fn(rows, n, |i, j| columns[j][i]))
}

/// Solve `jac * dx = rhs`, falling back to Tikhonov-regularized normal
/// equations with shift `1e-12 * ‖J‖∞` (scaled into `JᵀJ`) when LU fails.
fn solve_linear(jac: &Matrix, rhs: &Vector) -> Option<Vector> {
    if let Some(dx) = jac.clone().lu().solve(rhs) {
        if all_finite(&dx) {
            return Some(dx);
        }
    }
    let scale = matrix_inf_norm(jac);
    let shift = 1e-12 * scale * scale.max(1.0);
    let n = jac.ncols();
    let normal = jac.transpose() * jac + Matrix::identity(n, n) * shift;
    let dx = normal.cholesky()?.solve(&(jac.transpose() * rhs));
    all_finite(&dx).then_some(dx)
}

/// Damped Newton iteration for a square system `f(x) = 0` using
/// finite-difference Jacobians.
pub fn newton_solve<F>(f: F, x0: &Vector, opts: &NewtonOptions) -> Result<NewtonResult, NumericsError>
where
    F: Fn(&Vector) -> Vector,
{
    newton_solve_with(&f, |x: &Vector| fd_jacobian(&f, x, opts.fd_eps), x0, opts)
}

/// Damped Newton iteration with a caller-supplied Jacobian.
///
/// Each step halves the Newton direction until the residual ∞-norm does not
/// increase, at most `max_backtracks` times. The first iterate whose residual
/// is within `tol` is returned.
pub fn newton_solve_with<F, J>(
    f: F,
    jacobian: J,
    x0: &Vector,
    opts: &NewtonOptions,
) -> Result<NewtonResult, NumericsError>
where
    F: Fn(&Vector) -> Vector,
    J: Fn(&Vector) -> Result<Matrix, NumericsError>,
{
    let mut x = x0.clone();
    let mut fx = f(&x);
    if !all_finite(&fx) {
        return Err(NumericsError::NonFiniteStart);
    }
    if fx.len() != x.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: x.len(),
            actual: fx.len(),
        });
    }
    let mut norm = inf_norm(&fx);

    for iteration in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok(NewtonResult {
                x,
                residual_norm: norm,
                iterations: iteration,
                converged: true,
            });
        }
        let jac = jacobian(&x)?;
        let dx = solve_linear(&jac, &(-&fx)).ok_or(NumericsError::SingularJacobian { iteration })?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = &x + &dx * t;
            let ft = f(&trial);
            if all_finite(&ft) {
                let nt = inf_norm(&ft);
                if nt <= norm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, ft, nt)) => {
                x = trial;
                fx = ft;
                norm = nt;
            }
            None => {
                return Err(NumericsError::NonConvergence {
                    x: x.iter().copied().collect(),
                    residual_norm: norm,
                    iterations: iteration + 1,
                })
            }
        }
    }

    if norm <= opts.tol {
        return Ok(NewtonResult {
            x,
            residual_norm: norm,
            iterations: opts.max_iter,
            converged: true,
        });
    }
    Err(NumericsError::NonConvergence {
        x: x.iter().copied().collect(),
        residual_norm: norm,
        iterations: opts.max_iter,
    })
}
