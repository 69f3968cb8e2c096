//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Field order is not a prime number.
    #[error("{0} is not prime")]
    NotPrime(u64),

    /// Two field elements with different moduli were combined.
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    /// Multiplicative inverse of zero requested.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    /// A square system had no unique solution.
    #[error("matrix is singular")]
    SingularMatrix,

    /// A row, column, or message index was out of range.
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Field order too small for the requested code.
    #[error("field order {q} too small: need at least {min} for a [{t},{d}] code")]
    FieldTooSmall {
        q: u64,
        t: usize,
        d: usize,
        min: u64,
    },

    /// Protocol parameters violate a validity requirement.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Demand or side-information index sets violate a precondition.
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    /// Query, answer, or side information are mutually inconsistent.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    /// Exhaustive audit would exceed the enumeration budget.
    #[error("enumeration would need {needed} elementary checks, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    /// Audit applied to a table that does not satisfy its own precondition.
    #[error("audit not applicable: {0}")]
    AuditNotApplicable(String),

    /// A text artifact failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Transport-level failure.
    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
