use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular input: pivot {pivot:e} below threshold {threshold:e}")]
    SingularInput { pivot: f64, threshold: f64 },

    #[error("SVD did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("cocycle kind `{0}` is not valid here")]
    InvalidKind(&'static str),

    #[error("moment exponent p = {0} outside (2, 3]")]
    BadExponent(f64),

    #[error("conditional support of {atoms} atoms exceeds the cap of {cap}")]
    AlphabetTooLarge { atoms: usize, cap: usize },

    #[error("path too short: need at least {needed} increments, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("instance too large for exact transport: {0}")]
    TooLarge(String),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("non-positive value {value} in column `{column}`")]
    NonPositive { column: String, value: f64 },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
