use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{0}")]
    Mismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::USAGE,
            CliError::Data { .. } | CliError::Mismatch(_) | CliError::Io { .. } => exit::DATA,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }

    pub fn data(path: &Path, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Maps a library error, naming columns through `names` when given.
    pub fn from_core(err: mglasso_core::Error, names: Option<&[String]>) -> Self {
        use mglasso_core::Error as E;
        match err {
            E::InvalidParameter { .. } | E::DegenerateGrid | E::InvalidPair { .. } => {
                CliError::Config(err.to_string())
            }
            E::ZeroVariance { column } => {
                let name = names
                    .and_then(|n| n.get(column).cloned())
                    .unwrap_or_else(|| format!("V{}", column + 1));
                CliError::Mismatch(format!("column \"{name}\" has zero variance"))
            }
            E::DimensionMismatch { .. } => CliError::Mismatch(err.to_string()),
            E::NonFinite { .. } | E::NotPositiveDefinite { .. } | E::Divergence { .. } => {
                CliError::Numerical(err.to_string())
            }
        }
    }
}

impl From<mglasso_core::Error> for CliError {
    fn from(err: mglasso_core::Error) -> Self {
        CliError::from_core(err, None)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
