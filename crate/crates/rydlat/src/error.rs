use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Problems with a scenario file or its overrides.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },

    /// A unit-suffixed key holds something other than a plain number.
    #[error("unit error at `{field}`: {reason}")]
    Unit { field: String, reason: String },

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("malformed override `{0}`, expected key=value")]
    Override(String),
}

impl ConfigError {
    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Schema { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] rydlat_core::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Model(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Model(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
