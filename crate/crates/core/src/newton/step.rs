//! Hessian modification and backtracking line search.

use crate::error::{contract, Error, Result};
use crate::linalg::{cholesky_unchecked, LinalgError, Matrix};
use crate::Scalar;

/// Diagonal shift floor `β`.
pub const PRECONDITION_BETA: f64 = 1e-6;
/// Cholesky attempts before giving up.
pub const PRECONDITION_MAX_ATTEMPTS: usize = 60;
/// Sufficient-decrease constant `c₁`.
pub const ARMIJO_C1: f64 = 1e-4;
/// Step halvings after the unit step.
pub const ARMIJO_MAX_HALVINGS: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct PreconditionResult<T> {
    pub tau: T,
    /// Lower-triangular factor of `H + τI`.
    pub cholesky_factor: Matrix<T>,
    /// Cholesky factorizations tried, including the successful one.
    pub attempts: usize,
}

/// Smallest `τ` in `{0, τ₀, 2τ₀, 4τ₀, …}` making `H + τI` positive definite,
/// where `τ₀ = max(0, β − min diag H)` (raised to `β` when that is zero).
pub fn precondition<T: Scalar>(h: &Matrix<T>) -> Result<PreconditionResult<T>> {
    let h = h.symmetrized()?;
    let beta = T::c(PRECONDITION_BETA);
    let mut tau = T::zero();
    let mut shifted = h.clone();
    for attempt in 1..=PRECONDITION_MAX_ATTEMPTS {
        match cholesky_unchecked(&shifted) {
            Ok(l) => return Ok(PreconditionResult { tau, cholesky_factor: l, attempts: attempt }),
            Err(LinalgError::NotPositiveDefinite { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        tau = if tau == T::zero() {
            let min_diag = h.diagonal().into_iter().fold(T::infinity(), T::min);
            (beta - min_diag).max(T::zero()).max(beta)
        } else {
            tau + tau
        };
        if !tau.is_finite() {
            break;
        }
        shifted = h.clone();
        shifted.add_to_diagonal(tau);
    }
    Err(Error::PreconditionFailed { attempts: PRECONDITION_MAX_ATTEMPTS, tau: tau.to_f64_lossy() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch<T> {
    /// Accepted step, or zero when stalled.
    pub step: T,
    /// Merit at the accepted point (the initial merit when stalled).
    pub value: T,
    /// Merit evaluations spent on trial points.
    pub evaluations: usize,
    pub stalled: bool,
}

/// Backtracking with Armijo's condition
/// `merit(x0 + s d) <= merit(x0) + c₁ s ∇·d` over `s = 1, 1/2, …, 2⁻²⁵`.
/// Non-finite trial merits count as rejections.
pub fn armijo_backtrack<T: Scalar>(
    mut merit: impl FnMut(&[T]) -> T,
    x0: &[T],
    direction: &[T],
    grad_dot_dir: T,
) -> Result<LineSearch<T>> {
    let f0 = merit(x0);
    let trial = |s: T| -> Vec<T> { x0.iter().zip(direction).map(|(&x, &d)| x + s * d).collect() };
    armijo_along(|s| merit(&trial(s)), f0, grad_dot_dir)
}

/// Armijo backtracking on the one-dimensional merit `phi(s)` with
/// `phi(0) = f0` already known.
pub fn armijo_along<T: Scalar>(mut phi: impl FnMut(T) -> T, f0: T, grad_dot_dir: T) -> Result<LineSearch<T>> {
    if !(grad_dot_dir < T::zero()) {
        return contract(format!("line search needs a descent direction, got slope {grad_dot_dir}"));
    }
    if !f0.is_finite() {
        return Err(Error::NonFinite("merit at the line-search origin".into()));
    }
    let c1 = T::c(ARMIJO_C1);
    let mut s = T::one();
    for evaluations in 1..=ARMIJO_MAX_HALVINGS + 1 {
        let f = phi(s);
        if f.is_finite() && f <= f0 + c1 * s * grad_dot_dir {
            return Ok(LineSearch { step: s, value: f, evaluations, stalled: false });
        }
        s = s * T::c(0.5);
    }
    Ok(LineSearch { step: T::zero(), value: f0, evaluations: ARMIJO_MAX_HALVINGS + 1, stalled: true })
}
