//! Dense real linear algebra: matrices, norms, symmetric eigensolvers, SVD
//! and power iteration.

mod eigen;
mod matrix;
mod power;
pub mod random;
mod svd;

pub use eigen::{
    symmetric_eigen, symmetric_eigen_jacobi, symmetric_eigen_ql, SymmetricEigen, JACOBI_MAX_DIM,
};
pub use matrix::{axpy, dot, norm2, DenseMatrix};
pub use power::{power_iteration_sigma1, top_singular_values};
pub use svd::{singular_values, svd, SvdResult};

/// Square root of the sum of squared entries.
pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.frobenius_norm()
}

/// Largest absolute entry.
pub fn max_norm(a: &DenseMatrix) -> f64 {
    a.max_norm()
}
