//! Numerical tolerances used across the linear algebra routines.

/// Relative asymmetry `max|A - A^T| / max|A|` below which a matrix is
/// treated as symmetric (and symmetrized in place).
pub const SYMMETRY_REL: f64 = 1e-12;

/// Condition estimate at or above which a linear system is rejected.
pub const MAX_CONDITION: f64 = 1e14;

/// Orthogonality target for QR and eigenvector output.
pub const ORTHOGONALITY: f64 = 1e-10;

/// Reconstruction target for Cholesky (`|L L^T - A|_F / |A|_F`) and QR.
pub const RECONSTRUCTION: f64 = 1e-10;

/// Relative residual target for [`super::solve`].
pub const SOLVE_RESIDUAL: f64 = 1e-8;

/// Maximum implicit QL sweeps per eigenvalue.
pub const EIGEN_MAX_SWEEPS: usize = 60;
