//! Small dense linear algebra: a row-major [`Matrix`], Cholesky, LU solves,
//! Householder QR and a symmetric eigensolver.
//!
//! Everything here is unblocked and allocation-light. Problem sizes in this
//! crate stay in the low thousands of unknowns at most.

mod cholesky;
mod eigen;
mod lu;
mod matrix;
mod qr;
pub mod tol;

use thiserror::Error;

pub use cholesky::{cholesky, cholesky_solve};
pub(crate) use cholesky::cholesky_unchecked;
pub use eigen::{condition_number, sym_eigen, sym_eigenvalues, SymEigResult};
pub use lu::{solve, Lu};
pub use matrix::Matrix;
pub use qr::{qr, Qr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Cholesky met a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is singular to working precision (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub type LinalgResult<T> = std::result::Result<T, LinalgError>;

/// Euclidean norm of a slice.
pub fn norm2<T: crate::Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn dot<T: crate::Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
