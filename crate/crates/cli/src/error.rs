use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line}: {message}", path.display())]
    Data {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: no data rows", .0.display())]
    EmptyData(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] ball_accel::Error),

    #[error("could not serialize output: {0}")]
    Serialize(String),
}

impl CliError {
    /// Short machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Data { .. } | CliError::EmptyData(_) => "data",
            CliError::Config(_) => "config",
            CliError::Solver(_) => "solver",
            CliError::Serialize(_) => "serialize",
        }
    }

    pub fn line(&self) -> Option<u64> {
        match self {
            CliError::Data { line, .. } => Some(*line),
            _ => None,
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type Result<T> = std::result::Result<T, CliError>;
