//! Error types shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: no nonzeros found")]
    EmptyInput,

    #[error("duplicate coordinate at line {line}")]
    DuplicateCoordinate { line: usize },

    #[error("coordinate out of range: mode {mode} index {index} exceeds size {size}")]
    CoordinateOutOfRange {
        mode: usize,
        index: usize,
        size: usize,
    },

    #[error("multi-index component {index} out of range for mode of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("linear index width overflow: product of mode sizes exceeds u128")]
    IndexOverflow,

    #[error("mode linearization not precomputed for mode {mode}")]
    MissingLinearization { mode: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("deterministic candidate product {count} exceeds cap {cap}; increase tau")]
    CandidateCapExceeded { count: u128, cap: u128 },

    #[error("degenerate threshold: residual acceptance probability {0} below floor")]
    DegenerateTau(f64),

    #[error("rejection sampling failed to collect {needed} samples after {rounds} rounds")]
    RejectionStalled { needed: usize, rounds: usize },

    #[error("tensor has zero norm")]
    ZeroNorm,

    #[error("no nonempty fibers in mode {mode}")]
    NoFibers { mode: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
