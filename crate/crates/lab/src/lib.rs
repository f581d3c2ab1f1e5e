//! Experiment runner for `carleman-core`: configuration, run directories,
//! CSV/JSON reports, trajectory files and the experiment suites.

pub mod config;
pub mod io;
pub mod report;
pub mod suites;

use std::path::PathBuf;

pub use config::Config;
pub use report::{Assertion, Summary};
pub use suites::{run_suite, Suite};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Configuration that does not match the schema (exit code 2).
    #[error("configuration error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] carleman_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed trajectory file, line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Schema(_) => 2,
            _ => 1,
        }
    }
}

/// Stream id of run `run_id` of a suite: the suite code in the high 32 bits.
pub fn stream(suite: Suite, run_id: u64) -> u64 {
    ((suite.code() as u64) << 32) | run_id
}
