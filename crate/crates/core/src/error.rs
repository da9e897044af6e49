use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    /// A realization or enumeration would exceed the configured memory budget.
    #[error("resource budget exceeded: {what} = {value} (budget {budget})")]
    Budget {
        what: &'static str,
        value: String,
        budget: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A window scan found no witness. Not a proof of absence outside the window.
    #[error("no witness in window: {0}")]
    NoWitness(String),

    #[error("horizon not reached within cap: {0}")]
    HorizonNotReached(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
