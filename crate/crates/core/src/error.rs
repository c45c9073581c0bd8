use thiserror::Error;

/// Errors raised by the GRV library.
#[derive(Debug, Error)]
pub enum GrvError {
    /// Shapes do not match or are too small for the requested operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input violates a structural invariant (asymmetry, negative distance, bad genotype code).
    #[error("validation error: {0}")]
    Validation(String),

    /// Input is well-formed but carries no information (zero norm, zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numerical routine failed (eigensolver, ill-conditioned covariance).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Requested work exceeds a hard enumeration budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Malformed text input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for GrvError {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => GrvError::Io(io),
            other => GrvError::Parse(format!("{other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, GrvError>;
