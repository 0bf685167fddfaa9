//! Pre-flight checks for a config, without integrating.

use nhvi_core::numerics::inf_norm;
use nhvi_core::{boundary_frame, initial_discretize, DiscreteLagrangian, MechanicalModel, Vector};
use serde::Serialize;

use crate::config::SimConfig;

/// Relative tolerance for analytic partials against central differences.
pub const DERIVATIVE_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;
const PROJECTION_TOL: f64 = 1e-12;
const PROJECTION_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<String, String>) -> Check {
    match result {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

/// Run every check; later checks are skipped once the model cannot be built.
pub fn validate(config: &SimConfig) -> Vec<Check> {
    let mut checks = vec![check("schema", config.validate().map(|_| "ok".into()).map_err(|e| e.to_string()))];
    let model = match config.model.build() {
        Ok(model) => model,
        Err(e) => {
            checks.push(check("model", Err(e.to_string())));
            return checks;
        }
    };
    checks.push(check(
        "model",
        Ok(model
            .params()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")),
    ));
    if !checks[0].passed {
        return checks;
    }
    let model = model.as_ref();
    let q0 = Vector::from_column_slice(&config.q0);
    let v0 = Vector::from_column_slice(&config.v0);

    let init = initial_discretize(model, config.rule, &q0, &v0, config.h);
    checks.push(check(
        "initial_state",
        init.as_ref()
            .map(|_| format!("gap {:.6e}", model.boundary_gap(&q0)))
            .map_err(|e| e.to_string()),
    ));
    if let Ok(init) = &init {
        let ld = DiscreteLagrangian::new(model, config.rule);
        checks.push(check("derivatives", derivative_check(&ld, &init.q, &init.v, config.h)));
    }
    checks.push(check("boundary_frame", frame_check(model, &q0)));
    checks
}

fn derivative_check<M: MechanicalModel + ?Sized>(
    ld: &DiscreteLagrangian<'_, M>,
    q: &Vector,
    v: &Vector,
    h: f64,
) -> Result<String, String> {
    let partials = ld.partials(q, v, h);
    let central = |x: &Vector, f: &dyn Fn(&Vector) -> f64| {
        let mut probe = x.clone();
        Vector::from_fn(x.len(), |j, _| {
            let step = FD_STEP * x[j].abs().max(1.0);
            probe[j] = x[j] + step;
            let plus = f(&probe);
            probe[j] = x[j] - step;
            let minus = f(&probe);
            probe[j] = x[j];
            (plus - minus) / (2.0 * step)
        })
    };
    let d1 = central(q, &|x| ld.eval(x, v, h));
    let d2 = central(v, &|x| ld.eval(q, x, h));
    let dh = FD_STEP * h;
    let d3 = (ld.eval(q, v, h + dh) - ld.eval(q, v, h - dh)) / (2.0 * dh);
    let rel = |fd: &Vector, exact: &Vector| inf_norm(&(fd - exact)) / inf_norm(exact).max(1.0);
    let errors = [
        ("d1", rel(&d1, &partials.d1)),
        ("d2", rel(&d2, &partials.d2)),
        ("d3", (d3 - partials.d3).abs() / partials.d3.abs().max(1.0)),
    ];
    let detail = errors
        .iter()
        .map(|(name, e)| format!("{name} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    if errors.iter().all(|(_, e)| *e <= DERIVATIVE_TOL) {
        Ok(detail)
    } else {
        Err(format!("{detail} exceeds {DERIVATIVE_TOL:e}"))
    }
}

/// Slide `q` along `∇c` onto the boundary with Newton on the gap.
fn project_to_boundary<M: MechanicalModel + ?Sized>(model: &M, q: &Vector) -> Option<Vector> {
    let mut x = q.clone();
    for _ in 0..PROJECTION_MAX_ITER {
        let gap = model.boundary_gap(&x);
        if gap.abs() <= PROJECTION_TOL {
            return Some(x);
        }
        let grad = model.boundary_gap_grad(&x);
        let norm_sq = grad.norm_squared();
        if !(norm_sq > 0.0) {
            return None;
        }
        x -= grad * (gap / norm_sq);
    }
    None
}

fn frame_check<M: MechanicalModel + ?Sized>(model: &M, q0: &Vector) -> Result<String, String> {
    let point = project_to_boundary(model, q0).ok_or("projection onto the boundary did not converge")?;
    let frame = boundary_frame(model, &point).map_err(|e| e.to_string())?;
    let tangency = inf_norm(&(frame.tangent.transpose() * &frame.normal)) / frame.normal.norm();
    let coords = point.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    if tangency > 1e-10 {
        return Err(format!("at [{coords}]: tangent basis leaves the boundary (|Eᵀ∇c| = {tangency:e})"));
    }
    Ok(format!("at [{coords}]"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::bundled;

    #[test]
    fn bundled_configs_pass() {
        for name in ["particle", "ellipse", "pendulum"] {
            let config = SimConfig::from_json(bundled(name).unwrap()).unwrap();
            let checks = validate(&config);
            assert_eq!(checks.len(), 5, "{name}: {checks:?}");
            assert!(checks.iter().all(|c| c.passed), "{name}: {checks:?}");
        }
    }

    #[test]
    fn exterior_start_fails() {
        let mut config = SimConfig::from_json(bundled("particle").unwrap()).unwrap();
        config.q0[1] = -0.5;
        let checks = validate(&config);
        let initial = checks.iter().find(|c| c.name == "initial_state").unwrap();
        assert!(!initial.passed);
    }

    #[test]
    fn pole_start_fails() {
        let mut config = SimConfig::from_json(bundled("pendulum").unwrap()).unwrap();
        config.q0[0] = std::f64::consts::PI;
        let checks = validate(&config);
        assert!(!checks.iter().find(|c| c.name == "initial_state").unwrap().passed);
    }
}
