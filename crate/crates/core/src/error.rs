use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix entry is not finite at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("point {x} is outside the support of {family}")]
    OutOfSupport { family: &'static str, x: f64 },

    #[error("both densities vanish at the query point")]
    BothZero,

    #[error("feature map domain violation{}: {reason}", .row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    DomainViolation { row: Option<usize>, reason: String },

    #[error("objective became non-finite")]
    NonFiniteLoss,

    #[error("training data must contain both labels")]
    DegenerateLabels,

    #[error("too few samples: need at least {needed}, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("k = {k} is too large for a pool of {pool} points")]
    KTooLarge { k: usize, pool: usize },

    #[error("closed-form TV requires equal covariances (max difference {max_difference:e})")]
    CovariancesDiffer { max_difference: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {achieved:e})")]
    ToleranceNotMet { tol: f64, achieved: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {message}")]
    FileFormat { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user input (configs, files, arguments)
    /// rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidParameter(_)
                | Error::FileFormat { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
