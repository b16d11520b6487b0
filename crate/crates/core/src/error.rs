use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what} at index {index}: {value}")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("invalid configuration at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("point ({x}, {t}) lies outside every subdomain")]
    OutsideDomain { x: f64, t: f64 },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    Dimension {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("training halted at iteration {iteration}: {reason}")]
    TrainingHalted { iteration: usize, reason: String },

    #[error("integration halted at t = {last_valid_time}: {reason}")]
    IntegrationHalted { last_valid_time: f64, reason: String },

    #[error("CFL condition violated: dt * max|u| / dx = {courant}")]
    Cfl { courant: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("corrupt or incompatible file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Returns the first non-finite entry of `values` as an error.
pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}
