use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Valid input, negative finding (validation failed, no decay rate, ...).
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("blow-up at t = {time}: |W({mode:?})| = {magnitude:e}")]
    BlowUp {
        time: f64,
        mode: Vec<i64>,
        magnitude: f64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Analysis(_) => 1,
            CliError::Input(_) | CliError::Parse { .. } => 2,
            CliError::Io { .. } => 2,
            CliError::BlowUp { .. } => 3,
        })
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<wndkit_core::Error> for CliError {
    fn from(e: wndkit_core::Error) -> Self {
        use wndkit_core::Error as E;
        match e {
            E::BlowUp {
                time,
                mode,
                magnitude,
            } => CliError::BlowUp {
                time,
                mode,
                magnitude,
            },
            E::NoConvergence(_) | E::IllConditioned(_) | E::NotPositiveDefinite(_) => {
                CliError::Analysis(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
