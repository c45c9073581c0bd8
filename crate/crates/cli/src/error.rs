use grv::GrvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Grv(#[from] GrvError),

    #[error("{0}")]
    Usage(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Grv(e.into())
    }
}

impl CliError {
    /// 0 ok, 2 validation, 3 numeric degeneracy, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Grv(e) => match e {
                GrvError::Degenerate(_) | GrvError::Numeric(_) => 3,
                GrvError::Io(_) => 4,
                GrvError::Dimension(_)
                | GrvError::Validation(_)
                | GrvError::Budget(_)
                | GrvError::Parse(_) => 2,
            },
            CliError::Usage(_) | CliError::Manifest(_) => 2,
            CliError::Io(_) | CliError::Json(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
