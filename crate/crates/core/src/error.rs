use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by the library.
///
/// `Usage` covers every precondition a caller can violate (bad `k`, empty
/// input, mismatched dimensions). `Invariant` is reserved for internal
/// consistency failures detected by the engine's checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
