use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("parse error at line {line}, column {column}: cannot parse {field:?} as a number")]
    ParseField { line: usize, column: usize, field: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("system is rank deficient ({0}); retry with lambda > 0")]
    RankDeficient(String),

    #[error("optimization diverged at iteration {iteration}: non-finite {what}")]
    Divergence { iteration: usize, what: &'static str },

    #[error("not a model file")]
    NotAModel,

    #[error("unknown model type {0}")]
    UnknownModelType(String),

    #[error("file from a newer version: {tag} version {found}, this build reads up to {supported}")]
    NewerVersion { tag: String, found: u32, supported: u32 },

    #[error("corrupt model file at byte offset {offset}: {reason}")]
    CorruptModel { offset: usize, reason: String },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
