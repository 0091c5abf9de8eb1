use std::path::PathBuf;

use thiserror::Error;

/// Errors of the scenario runner, split by exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error{}{}: {message}", key.as_ref().map(|k| format!(" at key `{k}`")).unwrap_or_default(), line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Parse { key: Option<String>, line: Option<usize>, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("environment override {name}={value}: {reason}")]
    Override { name: String, value: String, reason: String },
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no trace to export for task {task}")]
    MissingTrace { task: String },
    #[error("numeric failure: {0}")]
    Numeric(#[from] wcsck_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    NumericFailure = 2,
    ConfigError = 3,
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub fn exit_status(&self) -> ExitStatus {
        match self {
            Self::Parse { .. } | Self::Validation(_) | Self::Override { .. } => ExitStatus::ConfigError,
            _ => ExitStatus::NumericFailure,
        }
    }
}
