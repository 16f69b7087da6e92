use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for a passing run.
pub const EXIT_PASS: u8 = 0;
/// Process exit status when at least one identity misses its tolerance.
pub const EXIT_FAIL: u8 = 1;
/// Process exit status for configuration and domain errors.
pub const EXIT_ERROR: u8 = 2;

/// Failures that stop a command before a verdict is reached. All map to
/// [`EXIT_ERROR`].
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Domain(#[from] conformable_kepler::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        EXIT_ERROR
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
