//! Configuration, sweep orchestration and result files for the `modsim`
//! command.

pub mod config;
pub mod sweep;

pub use config::{Cell, ConfigError, ScenarioConfig};
pub use sweep::{emit_outputs, run_sweep, RunFailure, RunOptions, RunResult, JOBS_ENV};
