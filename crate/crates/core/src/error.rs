use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("not a permutation of 1..={n}: {reason}")]
    InvalidPermutation { n: usize, reason: String },

    #[error("invalid integer partition: {0}")]
    InvalidPartition(String),

    #[error("degenerate point set: duplicate {axis}-coordinate")]
    DegeneratePoints { axis: char },

    #[error("index tuple is not strictly increasing")]
    IndicesNotIncreasing,

    #[error("position {index} out of range for size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("adjacency position {pos} outside 1..={max}")]
    InvalidAdjacency { pos: usize, max: usize },

    #[error("partition has no part equal to {part}")]
    MissingPart { part: usize },

    #[error("invalid proportions: p1={p1}, p2={p2} (need p1, p2 >= 0 and p1 + 2*p2 <= 1)")]
    BadProportions { p1: f64, p2: f64 },

    #[error("computation refused: estimated cost {estimated:.3e} exceeds limit {limit:.3e}")]
    CostGuard { estimated: f64, limit: f64 },

    #[error("conjugacy class too large: {size} elements (limit {limit})")]
    ClassTooLarge { size: u128, limit: u128 },

    #[error("set partitions of {r} elements refused (limit {limit})")]
    TooManyElements { r: usize, limit: usize },

    #[error("edge multiset is empty")]
    EmptyEdgeMultiset,

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },

    #[error("n-grid needs at least {need} points, got {got}")]
    GridTooShort { got: usize, need: usize },

    #[error("invalid input: {0}")]
    Constraint(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
