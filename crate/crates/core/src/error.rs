use alloc::string::String;

use thiserror::Error;

/// A configuration that cannot be simulated or analysed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("platform must have at least one chip and one core per chip")]
    NoCores,
    #[error("platform must have at least one memory bank")]
    NoBanks,
    #[error("UMA platform must have exactly one memory bank, got {0}")]
    UmaBanks(usize),
    #[error("{what} list is empty")]
    EmptySections { what: &'static str },
    #[error("{what} probabilities sum to {sum}, expected 1")]
    ProbabilitySum { what: &'static str, sum: f64 },
    #[error("{what} section {index} has probability {value} outside [0, 1]")]
    Probability {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("critical section {index} references bank {bank} but the platform has {banks}")]
    BankOutOfRange {
        index: usize,
        bank: usize,
        banks: usize,
    },
    #[error("lock {lock} is placed on bank {first} and on bank {second}")]
    LockBankMismatch { lock: u32, first: usize, second: usize },
    #[error("requested {requested} cores but the platform has {available}")]
    TooManyCores { requested: usize, available: usize },
    #[error("core count must be at least 1")]
    ZeroCores,
    #[error("max_ticks must be positive")]
    ZeroTicks,
}

/// Bad numeric input to one of the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("{0} is out of range")]
    OutOfRange(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} has zero norm")]
    ZeroNorm(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("{0} is empty")]
    Empty(&'static str),
}

/// Top-level error for simulator runs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Input(#[from] InputError),
    /// The engine reached a state its invariants rule out. Always a bug.
    #[error("engine invariant violated: {0}")]
    Invariant(String),
}
