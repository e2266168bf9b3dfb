//! Error taxonomy shared by the library and the CLI exit-status contract.

use thiserror::Error;

/// Library error. The three variants map onto the CLI exit statuses:
/// domain errors exit 1, schema errors exit 2, internal consistency
/// failures (a dual-formula disagreement, always a bug) exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on mathematically valid input failed; the message
    /// names the violated invariant.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or job file failed validation; the message names the
    /// violated invariant and, where possible, its location.
    #[error("schema error: {0}")]
    Schema(String),

    /// Two independent routes to the same quantity disagreed.
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub fn consistency(msg: impl Into<String>) -> Self {
        Error::Consistency(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 1,
            Error::Schema(_) => 2,
            Error::Consistency(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
