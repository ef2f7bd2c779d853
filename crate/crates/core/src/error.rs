use thiserror::Error;

/// Errors shared by the permutation, enumeration, and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("domain mismatch: {0}")]
    Domain(String),

    #[error("not a premap: {0}")]
    NotAPremap(String),

    #[error("enumeration guard exceeded: projected {projected} items, guard {guard}")]
    GuardExceeded { projected: u128, guard: u128 },

    #[error("unknown colour {0:?}")]
    UnknownColour(String),

    #[error("missing D matrix for colour {colour:?}, label {label}")]
    MissingDMatrix { colour: String, label: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid expression: {0}")]
    InvalidExpression(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
