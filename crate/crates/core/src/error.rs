//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("invalid menu: {0}")]
    InvalidMenu(String),

    #[error("invalid choice: {0}")]
    InvalidChoice(String),

    #[error("enumeration too large: {count} menus exceed the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("gain {gain} outside [0, {cap}]")]
    GainOutOfRange { gain: f64, cap: f64 },

    #[error("block too short: T={rounds} gives blocks of {block_len} rounds but {explorations} exploration slots are needed")]
    BlockTooShort {
        rounds: usize,
        block_len: usize,
        explorations: usize,
    },

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("adversary stream exhausted after {available} valuations, {requested} requested")]
    StreamExhausted { available: usize, requested: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EnumerationTooLarge { .. } => 3,
            Error::Config(_) | Error::Json(_) | Error::StreamExhausted { .. } => 2,
            _ => 1,
        }
    }
}
