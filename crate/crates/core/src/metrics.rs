//! Distance indicators between an approximation and a front, and budget
//! bookkeeping in equivalent function evaluations.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::newton::CallCounts;
use crate::points::{squared_distance, ObjectivePointSet};
use crate::problems::{front_sample, Problem};

/// Cost of one Jacobian evaluation in plain evaluations.
pub const JACOBIAN_COST: f64 = 1.47;
/// Cost of one second-derivative evaluation in plain evaluations.
pub const HESSIAN_COST: f64 = 1.89;
/// Front discretization for two objectives.
pub const FRONT_POINTS_2D: usize = 1000;
/// Front discretization for three objectives.
pub const FRONT_POINTS_3D: usize = 5000;

fn power_mean_distance(from: &ObjectivePointSet, to: &ObjectivePointSet, p: f64) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return contract("distance indicators need nonempty sets");
    }
    if from.dim() != to.dim() {
        return contract("sets live in different objective spaces");
    }
    if !(p >= 1.0) || !p.is_finite() {
        return contract(format!("p must be at least 1, got {p}"));
    }
    let mut acc = 0.0;
    for a in from.iter() {
        let d2 = to.iter().map(|f| squared_distance(a, f)).fold(f64::INFINITY, f64::min);
        acc += d2.sqrt().powf(p);
    }
    Ok((acc / from.len() as f64).powf(1.0 / p))
}

/// `GDₚ`: power mean over `a` of the distance to the nearest front point.
pub fn gd_p(a: &ObjectivePointSet, front: &ObjectivePointSet, p: f64) -> Result<f64> {
    power_mean_distance(a, front, p)
}

/// `IGDₚ`: power mean over the front of the distance to the nearest point of `a`.
pub fn igd_p(a: &ObjectivePointSet, front: &ObjectivePointSet, p: f64) -> Result<f64> {
    power_mean_distance(front, a, p)
}

/// Averaged Hausdorff distance `Δₚ = max(GDₚ, IGDₚ)`.
pub fn delta_p(a: &ObjectivePointSet, front: &ObjectivePointSet, p: f64) -> Result<f64> {
    Ok(gd_p(a, front, p)?.max(igd_p(a, front, p)?))
}

/// Discretized front used for metric evaluation.
pub fn reference_front(problem: &dyn Problem) -> Result<ObjectivePointSet> {
    let count = if problem.n_obj() == 2 { FRONT_POINTS_2D } else { FRONT_POINTS_3D };
    front_sample(problem, count)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetLedger {
    pub plain_evals: u64,
    pub jacobian_calls: u64,
    pub hessian_calls: u64,
    pub jac_cost: f64,
    pub hess_cost: f64,
}

impl Default for BudgetLedger {
    fn default() -> Self {
        Self { plain_evals: 0, jacobian_calls: 0, hessian_calls: 0, jac_cost: JACOBIAN_COST, hess_cost: HESSIAN_COST }
    }
}

impl BudgetLedger {
    pub fn new(plain_evals: u64, jacobian_calls: u64, hessian_calls: u64) -> Self {
        Self { plain_evals, jacobian_calls, hessian_calls, ..Self::default() }
    }

    pub fn from_calls(calls: CallCounts) -> Self {
        Self::new(calls.plain, calls.jacobian, calls.hessian)
    }

    /// Sum of the counts; the costs of `self` are kept.
    pub fn plus(&self, other: &BudgetLedger) -> Self {
        Self {
            plain_evals: self.plain_evals + other.plain_evals,
            jacobian_calls: self.jacobian_calls + other.jacobian_calls,
            hessian_calls: self.hessian_calls + other.hessian_calls,
            ..*self
        }
    }
}

/// `plain + jac_cost · jacobian + hess_cost · hessian`, rounded once: the
/// products and the sum are formed with their rounding errors carried along.
pub fn equivalent_evals(ledger: &BudgetLedger) -> f64 {
    let terms = [
        (1.0, ledger.plain_evals as f64),
        (ledger.jac_cost, ledger.jacobian_calls as f64),
        (ledger.hess_cost, ledger.hessian_calls as f64),
    ];
    let mut sum = 0.0;
    let mut err = 0.0;
    for (a, b) in terms {
        let p = a * b;
        err += a.mul_add(b, -p);
        let t = sum + p;
        err += if sum.abs() >= p.abs() { (sum - t) + p } else { (p - t) + sum };
        sum = t;
    }
    sum + err
}
