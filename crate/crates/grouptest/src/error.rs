//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{name} = {got} out of range 1..={max}")]
    IndexOutOfRange {
        name: &'static str,
        got: u64,
        max: u64,
    },

    #[error("verification work {work} exceeds budget {budget}: too large to verify")]
    BudgetExceeded { work: u128, budget: u128 },

    #[error("outcome file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
