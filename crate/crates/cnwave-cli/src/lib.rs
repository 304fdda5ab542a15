//! Experiment orchestration for `cnwave`: configuration, the parallel
//! stability sweep, and CSV/report emission.

pub mod config;
pub mod output;
pub mod suite;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ExperimentConfig, PerturbRule, TEndRule};
pub use suite::{run_single, run_stability_suite, Check, RunResult, SuiteSummary};

/// Exit status for a passing run.
pub const EXIT_PASS: i32 = 0;
/// Exit status when an acceptance threshold fails.
pub const EXIT_ACCEPTANCE: i32 = 1;
/// Exit status for malformed input.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for Newton failure, NaN or other numerical breakdown.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numerical(#[from] cnwave::Error),
    #[error("run m0={m0} eps={eps}: {source}")]
    Run { m0: f64, eps: f64, source: cnwave::Error },
}

fn numerical_code(e: &cnwave::Error) -> i32 {
    match e {
        cnwave::Error::Domain(_) | cnwave::Error::Config(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Numerical(e) => numerical_code(e),
            CliError::Run { .. } => EXIT_NUMERICAL,
        }
    }
}
