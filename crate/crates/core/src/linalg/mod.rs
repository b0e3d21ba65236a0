//! Small dense linear algebra: enough for certificates on `n ≤ 200` matrices.

mod eigen;
mod lu;
mod matrix;
mod symmetric;

pub use eigen::{eigenvalues, spectral_abscissa};
pub use lu::{determinant, solve, Lu};
pub use matrix::Matrix;
pub use symmetric::{cholesky, is_positive_definite, max_symmetric_eigenvalue, symmetric_eigenvalues};
