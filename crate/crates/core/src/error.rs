//! Crate-wide error type.

/// Errors raised by graph construction, numerical routines, and IO.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix or feature dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The requested quantity is undefined for this input (e.g. the diameter
    /// of a disconnected graph).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation exceeds a size guard; the message names the fallback.
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// A text format could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration file or run configuration is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric failure such as NaN gradients or divergence.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
