use thiserror::Error;

use crate::ar1::TestKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{kind} requires {requirement} (got {got})")]
    MinimumSize {
        kind: TestKind,
        requirement: &'static str,
        got: String,
    },

    /// Zero residual variance; nothing can be estimated from the series.
    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate(_) => 3,
            Error::NoConvergence(_) => 4,
            _ => 2,
        }
    }
}
