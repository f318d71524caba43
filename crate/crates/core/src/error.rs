use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("singular state: {0}")]
    Singular(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("field has no time law")]
    NoTimeLaw,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
