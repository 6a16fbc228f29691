//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (range, norm, shape).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was applied to an array it does not model
    /// (e.g. free-field synthesis on a baffled array).
    #[error("wrong model: {0}")]
    ModelMismatch(String),

    /// A quantity needed by an estimator is identically zero or missing.
    #[error("undefined field: {0}")]
    UndefinedField(String),

    /// Least-squares fit could not be computed.
    #[error("fit error: {0}")]
    Fit(String),

    /// Malformed input file.
    #[error("format error: {0}")]
    Format(String),

    /// Bad or inconsistent run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable class name, used in CLI diagnostics and exit codes.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::ModelMismatch(_) => "model",
            Error::UndefinedField(_) => "undefined-field",
            Error::Fit(_) => "fit",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "format",
        }
    }

    /// Process exit code for the CLI (0 = success, 2 = usage, handled by clap).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::ModelMismatch(_) => 3,
            Error::Io(_) => 4,
            Error::Format(_) | Error::Json(_) => 5,
            Error::UndefinedField(_) | Error::Fit(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
