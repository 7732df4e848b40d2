use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (bad length, out-of-range index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration field failed validation.
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The operation is not defined for the requested channel or mode.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An exhaustive search would exceed its enumeration budget.
    #[error("enumeration budget exceeded: {required} candidates > budget {budget}")]
    EnumerationBudget { required: u128, budget: u128 },

    /// Malformed persisted data (sequence files, profile CSV).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}

pub(crate) fn config_err<T>(field: &str, reason: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    })
}
