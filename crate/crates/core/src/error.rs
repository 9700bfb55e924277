//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by estimation, simulation and I/O routines.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("non-positive diagonal entry at index {index}: {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("matrix dimension {dim} exceeds dense cap {cap}; use the matrix-free path")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible edge count {requested} for {nodes} nodes (max {max})")]
    InfeasibleEdgeCount {
        requested: usize,
        nodes: usize,
        max: usize,
    },

    #[error("constraints unsatisfiable after {rounds} rounds: {context}")]
    ConstraintUnsatisfiable { rounds: usize, context: String },

    #[error("objective became non-finite at iteration {iteration}")]
    NumericFailure { iteration: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
