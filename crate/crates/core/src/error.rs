use thiserror::Error;

use crate::sequence::Position;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("illegal write at position {pos}: position is not masked")]
    IllegalWrite { pos: Position },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("fixture miss: no table entry for tokens {0:?}")]
    FixtureMiss(Vec<u32>),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("losslessness violation: {0}")]
    LosslessnessViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
