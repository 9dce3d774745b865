use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (player index, strategy, parameters).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("capacity exceeded: {what} has {count} states, cap is {cap}")]
    Capacity { what: String, count: u128, cap: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("game is not NBR-solvable")]
    NotSolvable,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("chain is not ergodic: {0}")]
    NonErgodic(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Json(_) | Error::Capacity { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
