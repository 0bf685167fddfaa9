use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nhvi_cli::config::{bundled, parse_config, SimConfig};
use nhvi_cli::runner::{run, Failure, RunError};
use nhvi_cli::validate::validate;

const EXIT_INVALID: u8 = 1;
const EXIT_INTEGRATOR: u8 = 2;

#[derive(Parser)]
#[command(name = "nhvi", version, about = "Nonholonomic variational integrator with elastic impacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one config, or several in parallel with --sweep.
    Run {
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        config: Option<PathBuf>,
        /// Configs run concurrently, each into `<out>/<file stem>`.
        #[arg(long, num_args = 1..)]
        sweep: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one of the bundled example configs.
    Demo {
        name: Demo,
        #[command(flatten)]
        overrides: Overrides,
        /// Defaults to `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without integrating it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Clone, Copy)]
struct Overrides {
    /// Replace the config's timestep.
    #[arg(long)]
    h: Option<f64>,
    /// Replace the config's final time.
    #[arg(long)]
    t_final: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    Particle,
    Ellipse,
    Pendulum,
}

impl Demo {
    fn name(self) -> &'static str {
        match self {
            Demo::Particle => "particle",
            Demo::Ellipse => "ellipse",
            Demo::Pendulum => "pendulum",
        }
    }
}

impl Overrides {
    fn apply(self, mut config: SimConfig) -> anyhow::Result<SimConfig> {
        if let Some(h) = self.h {
            config.h = h;
        }
        if let Some(t) = self.t_final {
            config.t_final = t;
        }
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NHVI_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config: Some(path),
            overrides,
            out,
            ..
        } => load(&path, overrides).and_then(|config| run_one(&config, &out)),
        Command::Run {
            sweep, overrides, out, ..
        } => run_sweep(&sweep, overrides, &out),
        Command::Demo { name, overrides, out } => {
            let out = out.unwrap_or_else(|| Path::new("out").join(name.name()));
            SimConfig::from_json(bundled(name.name()).expect("bundled demo"))
                .map_err(anyhow::Error::from)
                .and_then(|config| overrides.apply(config))
                .and_then(|config| run_one(&config, &out))
        }
        Command::Validate { config } => parse_config(&config)
            .map_err(anyhow::Error::from)
            .and_then(|config| check(&config)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<RunError>() {
        Some(RunError::Integrator(_)) => EXIT_INTEGRATOR,
        _ => EXIT_INVALID,
    }
}

fn load(path: &Path, overrides: Overrides) -> anyhow::Result<SimConfig> {
    let config = parse_config(path)?;
    overrides.apply(config).with_context(|| format!("after overrides on {}", path.display()))
}

fn run_one(config: &SimConfig, out: &Path) -> anyhow::Result<()> {
    match run(config, out) {
        Ok(outcome) => {
            let r = &outcome.report;
            println!(
                "{}: {} steps, {} impacts, energy drift {:.3e}, max energy jump {:.3e}",
                config.model.name(),
                r.steps,
                r.impact_count,
                r.energy_drift_rel,
                r.max_energy_jump
            );
            for path in &outcome.written {
                println!("  wrote {}", path.display());
            }
            Ok(())
        }
        Err(RunError::Integrator(err)) => {
            let failure = Failure {
                model: config.model.name(),
                message: err.to_string(),
                diagnostic: &err,
            };
            eprintln!("{}", serde_json::to_string_pretty(&failure)?);
            Err(RunError::Integrator(err).into())
        }
        Err(other) => Err(other.into()),
    }
}

fn run_sweep(paths: &[PathBuf], overrides: Overrides, out: &Path) -> anyhow::Result<()> {
    let configs = paths
        .iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .ok_or_else(|| anyhow!("{} has no file name", path.display()))?;
            Ok((out.join(stem), load(path, overrides)?))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut dirs: Vec<_> = configs.iter().map(|(dir, _)| dir).collect();
    dirs.sort();
    dirs.dedup();
    if dirs.len() != configs.len() {
        return Err(anyhow!("sweep configs must have distinct file names"));
    }

    let results: Vec<anyhow::Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(dir, config)| scope.spawn(move || run_one(config, dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("worker panicked"))))
            .collect()
    });
    let mut first_failure = None;
    for ((dir, _), result) in configs.iter().zip(results) {
        if let Err(err) = result {
            eprintln!("{}: {err:#}", dir.display());
            let code = exit_code(&err);
            if first_failure.as_ref().is_none_or(|(c, _)| code > *c) {
                first_failure = Some((code, err));
            }
        }
    }
    match first_failure {
        None => Ok(()),
        Some((_, err)) => Err(err.context("sweep had failures")),
    }
}

fn check(config: &SimConfig) -> anyhow::Result<()> {
    let checks = validate(config);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(anyhow!("{failed} check(s) failed"));
    }
    Ok(())
}
