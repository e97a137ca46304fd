//! Dense row-major linear algebra: products, Householder QR, Jacobi
//! eigendecomposition and a Gram-matrix SVD used as a test oracle.

mod decomp;
mod matrix;

pub use decomp::{qr_decompose, svd_oracle, sym_eig, Qr, Svd, SymEig};
pub use matrix::{matmul, DenseMatrix};
