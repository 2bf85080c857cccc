//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated series was too short for the requested accuracy.
    #[error("order too small: need K >= {needed}, have {have}")]
    OrderTooSmall { needed: usize, have: usize },

    /// The Rademacher c-sum failed to stabilize within its budget.
    #[error("unstable truncation at c_max = {c_used}: partial value {partial}, last block {last_block}")]
    UnstableTruncation {
        c_used: u64,
        partial: String,
        last_block: String,
    },

    /// A value expected to snap to an integer or small rational did not.
    #[error("not near integer: n = {n}, value {value}, distance {distance}")]
    NotNearInteger {
        n: u64,
        value: String,
        distance: String,
    },

    /// Series addition with incompatible fractional exponents.
    #[error("exponent mismatch: offsets {0}/24 and {1}/24 differ mod 1")]
    ExponentMismatch(i64, i64),

    /// Division by a series whose leading coefficient vanishes.
    #[error("division by series with zero leading coefficient")]
    ZeroLeadingCoefficient,

    /// Registry lookup or parse failure.
    #[error("registry error: {0}")]
    Registry(String),

    /// Identity or curve verification failed.
    #[error("verification failed: {0}")]
    VerificationFailed(String),

    /// A bounded search (scheme calibration, enumeration) ran out of budget.
    #[error("search budget exhausted: {0}")]
    SearchBudget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
