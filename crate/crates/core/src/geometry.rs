//! Mechanical-model interface and admissible-set boundary geometry.
//!
//! A model lives on a vector-space configuration space `Q = ℝⁿ`. The admissible
//! set is the level set `c(q) ≥ 0`, its boundary `c(q) = 0`. At a boundary
//! point the model supplies a tangent basis `E` (n × (n−1)) and a linear
//! projection `P` ((n−1) × n) with `P·E = I`. Covectors on the boundary are
//! stored as coefficients against the dual basis of `E`'s columns, so the
//! pullback of a momentum is `Eᵀ·p` and the push-forward of a boundary
//! covector is `Pᵀ·p̃`.

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{Matrix, Vector};

/// `|c(q)|` allowed when assembling a boundary frame.
pub const FRAME_GAP_TOL: f64 = 1e-8;
/// Allowed `‖P·E − I‖∞` in a boundary frame.
pub const FRAME_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum GeometryError {
    #[error("point is not on the boundary (gap {gap:e})")]
    NotOnBoundary { gap: f64 },
    #[error("degenerate boundary frame: {reason}")]
    DegenerateFrame { reason: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("configuration too close to a coordinate pole (|sin θ| = {sin_theta:e})")]
    PoleSingularity { sin_theta: f64 },
}

/// A mechanical system: Lagrangian, constraint one-forms, boundary geometry.
///
/// Coordinates are never wrapped. Angles live on the covering space ℝ.
pub trait MechanicalModel: Send + Sync {
    /// Configuration dimension `n`.
    fn dim(&self) -> usize;
    /// Number of constraint one-forms `m`.
    fn constraint_count(&self) -> usize;
    fn coordinate_names(&self) -> Vec<String>;

    fn lagrangian(&self, q: &Vector, v: &Vector) -> f64;

    fn dl_dq(&self, q: &Vector, v: &Vector) -> Vector {
        let f = |x: &Vector| self.lagrangian(x, v);
        fd_gradient(f, q)
    }

    fn dl_dv(&self, q: &Vector, v: &Vector) -> Vector {
        let f = |x: &Vector| self.lagrangian(q, x);
        fd_gradient(f, v)
    }

    /// Constraint one-forms as rows (`m × n`).
    fn omega(&self, q: &Vector) -> Matrix;

    /// Gap function: positive inside, zero on the boundary, negative outside.
    fn boundary_gap(&self, q: &Vector) -> f64;
    fn boundary_gap_grad(&self, q: &Vector) -> Vector;

    /// Columns span the tangent space of the boundary at `q`.
    fn tangent_basis(&self, q: &Vector) -> Result<Matrix, GeometryError>;
    /// The chosen left inverse of [`MechanicalModel::tangent_basis`].
    fn projection(&self, q: &Vector) -> Result<Matrix, GeometryError>;

    /// Inverse retraction divided by the step, realized on the chart.
    fn retract_inverse(&self, q: &Vector, v: &Vector, h: f64) -> Vector {
        (v - q) / h
    }

    /// Model-specific named parameters.
    fn params(&self) -> Vec<(String, f64)>;

    /// Reject configurations where the model's coordinates degenerate.
    fn check_configuration(&self, _q: &Vector) -> Result<(), GeometryError> {
        Ok(())
    }
}

fn fd_gradient<F: Fn(&Vector) -> f64>(f: F, x: &Vector) -> Vector {
    let mut probe = x.clone();
    Vector::from_fn(x.len(), |j, _| {
        let step = 1e-6 * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let plus = f(&probe);
        probe[j] = x[j] - step;
        let minus = f(&probe);
        probe[j] = x[j];
        (plus - minus) / (2.0 * step)
    })
}

/// Boundary data at a point of `∂S`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    pub point: Vector,
    /// `E`, columns spanning `T∂S`.
    pub tangent: Matrix,
    /// `P`, the chosen projection onto `T∂S`.
    pub projection: Matrix,
    /// `∇c` at the point.
    pub normal: Vector,
}

impl BoundaryFrame {
    pub fn boundary_dim(&self) -> usize {
        self.tangent.ncols()
    }
}

/// Assemble and validate the boundary frame at `point`.
pub fn boundary_frame<M: MechanicalModel + ?Sized>(model: &M, point: &Vector) -> Result<BoundaryFrame, GeometryError> {
    let n = model.dim();
    if point.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            actual: point.len(),
        });
    }
    let gap = model.boundary_gap(point);
    if !(gap.abs() <= FRAME_GAP_TOL) {
        return Err(GeometryError::NotOnBoundary { gap });
    }
    let tangent = model.tangent_basis(point)?;
    let projection = model.projection(point)?;
    if tangent.shape() != (n, n - 1) || projection.shape() != (n - 1, n) {
        return Err(GeometryError::DegenerateFrame {
            reason: format!(
                "frame shapes E {:?}, P {:?} for n = {n}",
                tangent.shape(),
                projection.shape()
            ),
        });
    }
    let defect = (&projection * &tangent - Matrix::identity(n - 1, n - 1)).amax();
    if !(defect <= FRAME_IDENTITY_TOL) {
        return Err(GeometryError::DegenerateFrame {
            reason: format!("P·E differs from the identity by {defect:e}"),
        });
    }
    let normal = model.boundary_gap_grad(point);
    let normal_norm = normal.norm();
    if !(normal_norm > 0.0) {
        return Err(GeometryError::DegenerateFrame {
            reason: "vanishing gap gradient".into(),
        });
    }
    // Transversality: ∇c must keep a component outside span(E).
    let gram = tangent.transpose() * &tangent;
    let coeffs = gram
        .lu()
        .solve(&(tangent.transpose() * &normal))
        .ok_or_else(|| GeometryError::DegenerateFrame {
            reason: "tangent basis columns are linearly dependent".into(),
        })?;
    let off_span = (&normal - &tangent * coeffs).norm();
    if off_span <= 1e-10 * normal_norm {
        return Err(GeometryError::DegenerateFrame {
            reason: "gap gradient lies in the tangent space".into(),
        });
    }
    Ok(BoundaryFrame {
        point: point.clone(),
        tangent,
        projection,
        normal,
    })
}

/// Restrict a momentum `p ∈ Q*` to the boundary: `Eᵀ·p`.
pub fn pullback_cotangent(frame: &BoundaryFrame, p: &Vector) -> Result<Vector, GeometryError> {
    if p.len() != frame.tangent.nrows() {
        return Err(GeometryError::DimensionMismatch {
            expected: frame.tangent.nrows(),
            actual: p.len(),
        });
    }
    Ok(frame.tangent.transpose() * p)
}

/// Extend a boundary covector to `Q*` through the projection: `Pᵀ·p̃`.
pub fn push_cotangent(frame: &BoundaryFrame, p_tilde: &Vector) -> Result<Vector, GeometryError> {
    if p_tilde.len() != frame.projection.nrows() {
        return Err(GeometryError::DimensionMismatch {
            expected: frame.projection.nrows(),
            actual: p_tilde.len(),
        });
    }
    Ok(frame.projection.transpose() * p_tilde)
}
