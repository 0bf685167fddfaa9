//! Library side of the `nhvi` command: config schema, runner and writers.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;
pub mod validate;

pub use config::{parse_config, ConfigError, SimConfig};
pub use runner::{run, RunError, RunOutcome};
