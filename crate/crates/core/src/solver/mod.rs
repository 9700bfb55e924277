//! The penalized pseudolikelihood objective, its forward-backward
//! splitting solver, the optimality certificate and the row-scaling
//! reparameterization maps.
//!
//! The objective over asymmetric p-by-p iterates is
//!
//! ```text
//! f(Omega) = -sum_i log omega_ii + ||Omega X'||_F^2 / (2n) + penalty(Omega)
//! ```
//!
//! whose smooth quadratic part has gradient Omega S with S = (1/n) X'X.
//! Each iteration takes a gradient step followed by the closed-form
//! proximal update; the step size is either fixed in (0, 2/L) or found by
//! a backtracking line search with 1/L as an always-accepted floor, where
//! L is the largest eigenvalue of S.

mod fbs;
mod objective;
mod penalty;
mod prox;
mod transform;

pub use fbs::{solve, FitResult, Init, SolverConfig, StepMode};
pub use objective::{gradient, kkt_residual, objective};
pub use penalty::{PenaltyPolicy, SupportPattern};
pub use prox::{prox_diagonal, soft_threshold};
pub use transform::{omega_to_theta, partial_correlations, theta_to_omega};
