use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("load error at row {row}, column `{column}`: {message}")]
    Load {
        row: usize,
        column: String,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate regression: {0}")]
    Degenerate(String),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("parameter vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("transition covariate value required in TVTP mode")]
    MissingCovariate,
    #[error("non-finite density at observation {t}")]
    NonFiniteDensity { t: usize },
    #[error("zero predicted probability at observation {t}")]
    ZeroPredicted { t: usize },
    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
