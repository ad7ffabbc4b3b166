//! Dense and sparse kernels shared by the rest of the crate.

mod cholesky;
mod dense;
mod eigen;
mod sparse;

pub use cholesky::{factorize_spd, solve_factored, SpdFactorization};
pub use dense::{DenseCholesky, DenseLu, DenseMatrix};
pub use eigen::{generalized_sym_eig, sym_eig, EigenDecomposition};
pub use sparse::{spmv, SparseMatrix, TripletBuilder};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
