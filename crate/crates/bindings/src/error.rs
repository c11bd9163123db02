use thiserror::Error;

#[derive(Debug, Error)]
pub enum BindingError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),

    #[error("method {method} has no parameter {param:?}")]
    UnknownParam { method: String, param: String },

    #[error("method {method} requires parameter {param:?}")]
    MissingParam { method: String, param: String },

    #[error("parameter {param:?} expects {expected}, got {actual}")]
    TypeMismatch { param: String, expected: String, actual: String },

    #[error("registration error: {0}")]
    Registration(String),

    #[error("invalid arguments for {method}: {message}")]
    InvalidArguments { method: String, message: String },

    #[error("{method} failed: {source}")]
    Run {
        method: String,
        #[source]
        source: mlkit::Error,
    },

    #[error("unknown wrapper backend {0:?}")]
    UnknownBackend(String),
}
