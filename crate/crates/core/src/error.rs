use num_bigint::BigUint;
use thiserror::Error;

/// Reasons a textual expansion of unity is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("every coefficient is zero")]
    AllZero,
    #[error("Parry condition violated at shift {shift}")]
    ParryViolation { shift: usize },
    #[error("expansion 1 gives base 1, not a Parry number")]
    DegenerateBase,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Unsupported(String),
    #[error("word of length {required} exceeds the materialization cap of {cap} letters")]
    MemoryCap { required: BigUint, cap: usize },
    #[error("factor {0} does not occur in the prefix")]
    FactorAbsent(String),
    #[error("factor {factor} occurs {found} time(s); at least 2 occurrences are needed")]
    TooFewOccurrences { factor: String, found: usize },
    #[error("prefix too short: need at least {required} letters, have {actual}")]
    PrefixTooShort { required: usize, actual: usize },
    #[error("return words of {0} are still changing at this prefix length")]
    UnstableReturnSet(String),
    #[error("precision insufficient: bound {achieved:e} exceeds requested {requested:e}")]
    PrecisionInsufficient { requested: f64, achieved: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
