//! Estimation of sparse partial-correlation networks from high-dimensional
//! data, via an l1-penalized asymmetric pseudolikelihood objective solved by
//! forward-backward splitting.
//!
//! The crate provides the full pipeline at library level:
//!
//! * [`linalg`] — centered data matrices, sparse iterates, Gram matrix,
//!   matrix-free spectral bound;
//! * [`solver`] — the objective, its closed-form proximal step, the FBS
//!   main loop (fixed step and backtracking), optimality certificates and
//!   the row-scaling reparameterization maps;
//! * [`select`] — regularization paths with warm starts, extended
//!   pseudo-BIC scoring and the two-stage debiasing refit;
//! * [`sim`] — ground-truth graph and precision-matrix generators with
//!   seeded Gaussian samplers;
//! * [`metrics`] — confusion counts, MCC, path AUPRC and squared/maximum
//!   estimation errors against ground truth;
//! * [`parallel`] — block-partitioned ring multiplication and the two-step
//!   gradient for the n << p regime;
//! * [`io`] — the on-disk formats (CSV and raw binary data matrices,
//!   MatrixMarket sparse output, edge lists, traces, JSON reports).
//!
//! All randomized routines take explicit `u64` seeds and use the ChaCha8
//! stream cipher generator, so outputs are reproducible across platforms.

pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod parallel;
pub mod select;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{center_columns, spdm, DenseData, DenseSquare, SparseSquare, DENSE_CAP};
pub use metrics::{ConfusionCounts, EvalReport};
pub use select::{PathResult, PathSummary};
pub use sim::{GeneratorInfo, GraphModel, TriangularFactor};
pub use solver::{FitResult, PenaltyPolicy, SolverConfig, StepMode};
