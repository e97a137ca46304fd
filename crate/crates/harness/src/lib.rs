//! Experiment configuration, deterministic runner, CSV telemetry and the
//! pieces behind the `lite` command line.

pub mod checks;
pub mod config;
pub mod csv;
pub mod error;
pub mod reports;
pub mod runner;

pub use config::{load_config, parse_config, ExperimentConfig, LandscapeConfig, OptimizerChoice};
pub use error::{HarnessError, EXIT_DIVERGED};
pub use runner::{run_experiment, run_to_string, RunSummary};
