//! Dense and sparse matrix primitives shared by the estimator, the
//! simulators and the evaluation code: column centering, Gram matrix,
//! matrix-free spectral bound and sparse-dense products.

mod dense;
mod sparse;

pub use dense::{center_columns, DenseData, DenseSquare, DENSE_CAP};
pub use sparse::{spdm, SparseBuilder, SparseSquare};

pub(crate) use sparse::spdm_rows_into;
