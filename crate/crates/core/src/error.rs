use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input graph or embedding. `location` names the offending item.
    #[error("invalid input at {location}: {message}")]
    Invalid { location: String, message: String },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("no cut graph needed: embedding has Euler genus 0")]
    GenusZero,

    #[error("search budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("graph is not rescaled: minimum pairwise distance is {min_distance}, expected 1")]
    NotRescaled { min_distance: f64 },

    /// A pipeline stage failed its own certification.
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
