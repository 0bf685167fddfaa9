//! Run a config end to end and write its artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nhvi_core::{
    build_report, simulate, DiscreteLagrangian, IntegratorError, MechanicalModel, RunReport, SimOptions, Trajectory,
    Vector,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ModelConfig, PlotKind, SimConfig};
use crate::output::{write_impacts_csv, write_trajectory_csv};
use crate::plot::{Chart, Series};

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const IMPACTS_CSV: &str = "impacts.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const FAILURE_JSON: &str = "failure.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot build model: {0}")]
    Model(String),
    #[error("integration failed: {0}")]
    Integrator(#[from] IntegratorError),
    #[error("diagnostics failed: {0}")]
    Diagnostics(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl RunError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
        move |source| RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub model: &'static str,
    pub config: &'a SimConfig,
    pub report: RunReport,
}

#[derive(Debug, Serialize)]
pub struct Failure<'a> {
    pub model: &'static str,
    pub message: String,
    pub diagnostic: &'a IntegratorError,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub written: Vec<PathBuf>,
}

fn options(config: &SimConfig) -> SimOptions {
    SimOptions {
        newton: config.solver,
        boundary_momentum: config.boundary_momentum,
        ..SimOptions::default()
    }
}

/// Simulate `config` without touching the filesystem.
pub fn integrate(config: &SimConfig) -> Result<(Box<dyn MechanicalModel>, Trajectory), RunError> {
    let model = config.model.build().map_err(|e| RunError::Model(e.to_string()))?;
    let ld = DiscreteLagrangian::new(model.as_ref(), config.rule);
    let traj = simulate(
        &ld,
        &Vector::from_column_slice(&config.q0),
        &Vector::from_column_slice(&config.v0),
        config.t0,
        config.t_final,
        config.h,
        &options(config),
    )?;
    Ok((model, traj))
}

/// Run `config` and write its artifacts into `out_dir`.
///
/// On an integrator failure `failure.json` is written before the error is
/// returned.
pub fn run(config: &SimConfig, out_dir: &Path) -> Result<RunOutcome, RunError> {
    fs::create_dir_all(out_dir).map_err(RunError::io(out_dir))?;
    let (model, traj) = match integrate(config) {
        Ok(done) => done,
        Err(RunError::Integrator(err)) => {
            let path = out_dir.join(FAILURE_JSON);
            let failure = Failure {
                model: config.model.name(),
                message: err.to_string(),
                diagnostic: &err,
            };
            write_json(&path, &failure)?;
            return Err(RunError::Integrator(err));
        }
        Err(other) => return Err(other),
    };
    let ld = DiscreteLagrangian::new(model.as_ref(), config.rule);
    let report = build_report(&traj, &ld).map_err(|e| RunError::Diagnostics(e.to_string()))?;
    let mut written = Vec::new();

    if config.outputs.csv {
        let path = out_dir.join(TRAJECTORY_CSV);
        let file = File::create(&path).map_err(RunError::io(&path))?;
        write_trajectory_csv(BufWriter::new(file), &traj, &ld).map_err(|source| RunError::Csv {
            path: path.clone(),
            source,
        })?;
        written.push(path);

        let path = out_dir.join(IMPACTS_CSV);
        let file = File::create(&path).map_err(RunError::io(&path))?;
        write_impacts_csv(BufWriter::new(file), &traj, &model.coordinate_names()).map_err(|source| {
            RunError::Csv {
                path: path.clone(),
                source,
            }
        })?;
        written.push(path);
    }

    let mut plotted = Vec::new();
    for kind in &config.outputs.plots {
        if plotted.contains(kind) {
            continue;
        }
        plotted.push(*kind);
        let (name, chart) = chart(*kind, config, model.as_ref(), &traj, &ld);
        let path = out_dir.join(name);
        fs::write(&path, chart.to_svg()).map_err(RunError::io(&path))?;
        written.push(path);
    }

    if config.outputs.summary {
        let path = out_dir.join(SUMMARY_JSON);
        let summary = Summary {
            model: config.model.name(),
            config,
            report: report.clone(),
        };
        write_json(&path, &summary)?;
        written.push(path);
    }
    Ok(RunOutcome { report, written })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let file = File::create(path).map_err(RunError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| RunError::io(path)(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(RunError::io(path))
}

/// Horizontal position used by the plane-trajectory plot.
fn plane_point(model: &ModelConfig, q: &Vector) -> (f64, f64) {
    match model {
        ModelConfig::Particle(_) => (q[0], q[1]),
        ModelConfig::Se2Body(_) => (q[1], q[2]),
        ModelConfig::Pendulum(p) => {
            let r = p.length * q[0].sin();
            (r * q[1].cos(), r * q[1].sin())
        }
    }
}

fn chart<M: MechanicalModel + ?Sized>(
    kind: PlotKind,
    config: &SimConfig,
    model: &M,
    traj: &Trajectory,
    ld: &DiscreteLagrangian<'_, M>,
) -> (&'static str, Chart) {
    let title_model = config.model.name();
    match kind {
        PlotKind::Energy => {
            let points = nhvi_core::energy_series(traj, ld)
                .iter()
                .map(|s| (s.t, s.energy))
                .collect();
            (
                "energy.svg",
                Chart {
                    title: format!("{title_model}: discrete energy"),
                    x_label: "t".into(),
                    y_label: "E".into(),
                    series: vec![Series {
                        label: "E".into(),
                        points,
                    }],
                    equal_aspect: false,
                },
            )
        }
        PlotKind::Coordinates => {
            let series = model
                .coordinate_names()
                .into_iter()
                .enumerate()
                .map(|(i, label)| Series {
                    label,
                    points: traj.states.iter().map(|s| (s.t, s.q[i])).collect(),
                })
                .collect();
            (
                "coordinates.svg",
                Chart {
                    title: format!("{title_model}: coordinates"),
                    x_label: "t".into(),
                    y_label: "q".into(),
                    series,
                    equal_aspect: false,
                },
            )
        }
        PlotKind::PlaneTrajectory => {
            let points = traj.states.iter().map(|s| plane_point(&config.model, &s.q)).collect();
            let (x_label, y_label) = match config.model {
                ModelConfig::Pendulum(_) => ("l sin(theta) cos(phi)", "l sin(theta) sin(phi)"),
                _ => ("x", "y"),
            };
            (
                "plane_trajectory.svg",
                Chart {
                    title: format!("{title_model}: trajectory"),
                    x_label: x_label.into(),
                    y_label: y_label.into(),
                    series: vec![Series {
                        label: "path".into(),
                        points,
                    }],
                    equal_aspect: true,
                },
            )
        }
    }
}
