use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("bad magic")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
