use thiserror::Error;

use crate::comm::TransportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {what} (limit {limit})")]
    Index {
        what: &'static str,
        index: u64,
        limit: u64,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with arguments that break its contract
    /// (e.g. a partner lookup on an index whose struck bit is already set).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("measurement outcome {outcome} has zero probability")]
    ZeroProbability { outcome: u64 },

    #[error("{0} did not converge")]
    NotConverged(&'static str),

    #[error("{m} rejected: {reason}")]
    Rejected { m: u64, reason: Rejection },

    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Why a number is not a candidate for period-finding factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    TooSmall,
    PowerOfTwo,
    Prime,
    Even,
    TooLarge,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rejection::TooSmall => "too small",
            Rejection::PowerOfTwo => "power of 2",
            Rejection::Prime => "prime",
            Rejection::Even => "even",
            Rejection::TooLarge => "too large to simulate",
        })
    }
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
