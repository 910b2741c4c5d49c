use thiserror::Error;

/// Errors surfaced by model construction, channel generation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input that must be finite was NaN or infinite.
    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },

    /// A value fell outside a function's documented domain (e.g. a negative
    /// power or gain).
    #[error("domain error: {what} must be non-negative, got {value}")]
    Domain { what: &'static str, value: f64 },

    /// Array shapes disagree with the network configuration.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    /// A configuration field violates its documented range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A solver gave up (iteration cap, numerical breakdown) without a usable point.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Brute-force enumeration would exceed the configured combination guard.
    #[error("enumeration too large: {combinations} combinations exceed the guard of {guard}; {hint}")]
    EnumerationTooLarge {
        combinations: u128,
        guard: u128,
        hint: String,
    },

    /// Malformed input file (JSON import, config file).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
