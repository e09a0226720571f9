use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NonHermitian(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsupportedDimension(_) | Error::InvalidInput(_) | Error::DimensionMismatch(_) => 2,
            Error::Io(_) | Error::Parse(_) => 2,
            Error::NonHermitian(_) | Error::Inconsistent(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
