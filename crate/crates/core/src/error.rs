use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole at {0}")]
    Pole(String),
    #[error("not implemented for this variant: {0}")]
    NotImplemented(String),
    #[error("domain too small: {0}")]
    DomainTooSmall(String),
    #[error("point lies on a loop")]
    PointOnLoop,
    #[error("mask too large for exact enumeration: {0} sites")]
    MaskTooLarge(usize),
    #[error("estimation failure: {0}")]
    Estimation(String),
    #[error("calibration failure: {0}")]
    Calibration(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
