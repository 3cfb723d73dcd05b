//! Orchestration for `weil-core`: named verification suites with
//! deterministic reports, exports, and an advisory on-disk cache.

pub mod cache;
pub mod config;
pub mod export;
pub mod report;
pub mod suites;

pub use config::{Budget, Format, SuiteConfig, SuiteName};
pub use report::{CheckTally, SuiteReport, Witness};
pub use suites::run_suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] weil_core::Error),
    #[error("serialization: {0}")]
    Serialize(String),
}

impl CliError {
    /// 1 is reserved for mathematical failures, which are reports, not errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Core(weil_core::Error::Budget { .. }) => 3,
            CliError::Io { .. } | CliError::Core(_) | CliError::Serialize(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
