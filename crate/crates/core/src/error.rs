use thiserror::Error;

/// Errors raised by the sieves, checkers and verifiers.
///
/// Precondition violations are errors; a missing Goldbach partition is not an
/// error but a reported failure (see [`crate::report::RunReport::failing_n`]).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{n} is not an odd integer >= {base}")]
    NotRepresentable { n: u64, base: u64 },

    #[error("sieve limit {limit} is below 3")]
    SieveLimitTooSmall { limit: u64 },

    #[error("invalid sieve window [{lo}, {hi}]")]
    InvalidWindow { lo: u64, hi: u64 },

    #[error("base primes reach {have}, window needs primes up to {need}")]
    InsufficientBasePrimes { have: u64, need: u64 },

    #[error("modulus must be at least 2, got {m}")]
    InvalidModulus { m: u64 },

    #[error("{n} must be an even integer >= 4")]
    NotEvenAtLeastFour { n: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("limit {limit} needs {required} bytes, budget is {budget} bytes")]
    Infeasible {
        limit: u64,
        required: u64,
        budget: u64,
    },

    #[error("malformed number {0:?}")]
    MalformedNumber(String),

    #[error("model domain requires x >= 10, got {x}")]
    OutsideModelDomain { x: u64 },

    #[error("no partition found for {n}: counterexample")]
    Counterexample { n: String },

    #[error("no partition of {n} with p <= {bound}: inconclusive")]
    Inconclusive { n: String, bound: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
