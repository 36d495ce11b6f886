use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{key}`: {constraint}")]
    Invalid { key: String, constraint: String },

    #[error("non-finite value for `{0}`")]
    NonFinite(String),

    #[error("boosting factor {0} outside [1, 1 + lambda]")]
    BoostOutOfRange(f64),

    #[error("gini impurity is undefined for all-zero class counts")]
    EmptyCounts,

    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),

    #[error("config parse error: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 1 validation, 2 missing input, 3 calibration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput(_) => 2,
            Error::Calibration(_) => 3,
            _ => 1,
        }
    }

    pub fn invalid(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}
