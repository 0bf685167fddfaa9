//! CSV and JSON writers for a finished run.

use std::io::Write;

use nhvi_core::numerics::inf_norm;
use nhvi_core::{omega_dplus, DiscreteLagrangian, MechanicalModel, Trajectory};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per node: `k, t, q_*, v_*, p_*, lambda_*, E, c, max_omega_residual`.
pub fn write_trajectory_csv<W: Write, M: MechanicalModel + ?Sized>(
    out: W,
    traj: &Trajectory,
    ld: &DiscreteLagrangian<'_, M>,
) -> csv::Result<()> {
    let model = ld.model();
    let names = model.coordinate_names();
    let mut header = vec!["k".to_string(), "t".to_string()];
    for prefix in ["q", "v", "p"] {
        header.extend(names.iter().map(|n| format!("{prefix}_{n}")));
    }
    header.extend((0..model.constraint_count()).map(|i| format!("lambda_{i}")));
    header.extend(["E", "c", "max_omega_residual"].map(String::from));

    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    let h = traj.h;
    for state in &traj.states {
        let mut row = vec![state.k.to_string(), num(state.t)];
        for values in [&state.q, &state.v, &state.p, &state.lambda] {
            row.extend(values.iter().map(|x| num(*x)));
        }
        row.push(num(ld.energy(&state.q, &state.v, h)));
        row.push(num(model.boundary_gap(&state.q)));
        row.push(num(inf_norm(&omega_dplus(model, &state.q, &state.v, h))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per impact.
pub fn write_impacts_csv<W: Write>(out: W, traj: &Trajectory, coordinate_names: &[String]) -> csv::Result<()> {
    let mut header = vec!["k".to_string(), "alpha".to_string(), "t_impact".to_string()];
    for prefix in ["q_tilde", "v_tilde"] {
        header.extend(coordinate_names.iter().map(|n| format!("{prefix}_{n}")));
    }
    let boundary_dim = coordinate_names.len().saturating_sub(1);
    header.extend((0..boundary_dim).map(|i| format!("p_tilde_{i}")));
    header.extend(["compat_residual", "energy_jump"].map(String::from));

    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for event in &traj.impacts {
        let mut row = vec![event.k.to_string(), num(event.alpha), num(event.t_impact)];
        for values in [&event.q_tilde, &event.v_tilde, &event.p_tilde] {
            row.extend(values.iter().map(|x| num(*x)));
        }
        row.push(num(event.compat_residual));
        row.push(num(event.energy_jump));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
