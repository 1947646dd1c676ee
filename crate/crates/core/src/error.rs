use thiserror::Error;

/// Errors raised by the exact arithmetic and verification layers.
///
/// Mathematical check failures that are part of a verification report are
/// not errors; they are returned inside the report. `Error` is reserved for
/// invalid inputs, resource limits and internal consistency violations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("enumeration cap exceeded: {what} needs {required} elements, cap is {cap}")]
    Resource {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("not coprime: {0}")]
    NotCoprime(String),

    #[error("no surjection exists: {0}")]
    NoSurjection(String),

    #[error("realizability violated: {0}")]
    Realizability(String),

    #[error("coherence check failed: {0}")]
    Coherence(String),

    #[error("not a unit: {0}")]
    NotUnit(String),

    #[error("convergence precondition failed: {0}")]
    Convergence(String),

    #[error("character is unramified, use eps_unramified: {0}")]
    Unramified(String),

    #[error("not a subgroup: {0}")]
    NotSubgroup(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
