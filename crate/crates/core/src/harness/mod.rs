//! Seeded multi-task experiments: configuration, execution, CSV output,
//! hyperparameter sweeps and the sample-savings demo.

mod config;
pub mod csv;
mod run;
pub mod savings;
pub mod stats;
mod sweep;

use std::path::{Path, PathBuf};

pub use config::{AnyLearner, Annotations, Hyperparameters, LearnerKind, Preset, RunConfig};
pub use run::{run_experiment, run_learner, ExperimentResult, LearnerRun, TaskRow};
pub use savings::{estimate_savings_demo, SavingsConfig, SavingsReport};
pub use sweep::{sweep, SweepParam};

use crate::env::EnvError;
use crate::learners::LearnError;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_VAR: &str = "TEMPLE_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] ::csv::Error),
}

/// Where output goes: `TEMPLE_OUTPUT_DIR` if set, else the configured
/// directory, else `results`.
pub fn output_dir(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.map_or_else(|| PathBuf::from("results"), Path::to_path_buf),
    }
}
