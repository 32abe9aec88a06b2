//! Numerical kernel: sparse storage, norms and subspace arithmetic.

mod dense;
mod sparse;

pub use dense::*;
pub use sparse::{SparseMatrix, DROP_TOL};
