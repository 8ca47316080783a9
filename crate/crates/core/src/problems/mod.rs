//! Benchmark problems with exact first and second derivatives.
//!
//! Objectives are defined once in [`formulas`] and differentiated by forward
//! mode AD (see [`crate::ad`]). Box bounds double as `2n` linear inequality
//! constraints `g(x) <= 0`: `g_j = lower_j - x_j` for `j < n` and
//! `g_{n+j} = x_j - upper_j`.

mod formulas;
pub(crate) mod fronts;

pub use formulas::Benchmark;

use crate::ad::{Dual, HyperDual};
use crate::error::{contract, Error, Result};
use crate::linalg::Matrix;
use crate::points::{ObjectivePointSet, StackedDecision};

/// Value, Jacobian (`k x n`) and per-objective Hessians (`k` of `n x n`).
pub type Derivatives = (Vec<f64>, Matrix<f64>, Vec<Matrix<f64>>);

/// A vector constraint function `c: R^n -> R^count` evaluated per point.
pub trait ConstraintFn: Send + Sync {
    fn count(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    /// `count x n`.
    fn jacobian(&self, x: &[f64]) -> Matrix<f64>;
    /// Per-component Hessians, or `None` when every component is linear.
    fn hessians(&self, x: &[f64]) -> Option<Vec<Matrix<f64>>>;
    /// `Some((var, value))` when component `j` is `±(x_var - value)`, so that
    /// activity pins a single variable.
    fn bound(&self, _j: usize) -> Option<(usize, f64)> {
        None
    }
}

/// The `2n` box constraints of a problem.
#[derive(Clone, Debug)]
pub struct BoxConstraints {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxConstraints {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }
}

impl ConstraintFn for BoxConstraints {
    fn count(&self) -> usize {
        2 * self.lower.len()
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let lo = self.lower.iter().zip(x).map(|(l, xi)| l - xi);
        let hi = self.upper.iter().zip(x).map(|(u, xi)| xi - u);
        lo.chain(hi).collect()
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix<f64> {
        let n = self.lower.len();
        let mut j = Matrix::zeros(2 * n, n);
        for i in 0..n {
            j[(i, i)] = -1.0;
            j[(n + i, i)] = 1.0;
        }
        j
    }

    fn hessians(&self, _x: &[f64]) -> Option<Vec<Matrix<f64>>> {
        None
    }

    fn bound(&self, j: usize) -> Option<(usize, f64)> {
        let n = self.lower.len();
        if j < n {
            Some((j, self.lower[j]))
        } else {
            Some((j - n, self.upper[j - n]))
        }
    }
}

/// A multi-objective problem `F: R^n -> R^k` to be minimized.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn n_var(&self) -> usize;
    fn n_obj(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn evaluate(&self, x: &[f64]) -> Vec<f64>;
    /// `DF(x)`, `k x n`.
    fn jacobian(&self, x: &[f64]) -> Matrix<f64>;
    /// `D²F(x)` as one `n x n` Hessian per objective.
    fn hessian_tensor(&self, x: &[f64]) -> Vec<Matrix<f64>>;

    /// All three at once; implementations may share work.
    fn derivatives(&self, x: &[f64]) -> Derivatives {
        (self.evaluate(x), self.jacobian(x), self.hessian_tensor(x))
    }

    fn equality_constraints(&self) -> Option<&dyn ConstraintFn> {
        None
    }

    fn inequality_constraints(&self) -> Option<&dyn ConstraintFn> {
        None
    }

    /// A discretization of the true Pareto front, when known.
    fn front_sample(&self, _count: usize) -> Option<ObjectivePointSet> {
        None
    }
}

/// One of the built-in benchmark problems.
#[derive(Clone, Debug)]
pub struct ProblemDef {
    kind: Benchmark,
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    bounds: BoxConstraints,
}

impl ProblemDef {
    pub fn kind(&self) -> Benchmark {
        self.kind
    }
}

/// Names accepted by [`make_problem`].
pub fn problem_names() -> Vec<&'static str> {
    Benchmark::ALL.iter().map(|b| b.name()).collect()
}

/// Builds a benchmark by name with its standard dimension unless `n` is given.
pub fn make_problem(name: &str, n: Option<usize>) -> Result<ProblemDef> {
    let kind = Benchmark::from_name(name)
        .ok_or_else(|| Error::UnknownProblem { name: name.to_string(), available: problem_names().join(", ") })?;
    let n = n.unwrap_or_else(|| kind.default_n_var());
    if n < kind.min_n_var() || n > kind.max_n_var() {
        return contract(format!(
            "{} needs between {} and {} decision variables, got {n}",
            kind.name(),
            kind.min_n_var(),
            kind.max_n_var()
        ));
    }
    let (lower, upper) = kind.bounds(n);
    let bounds = BoxConstraints::new(lower.clone(), upper.clone());
    Ok(ProblemDef { kind, n, lower, upper, bounds })
}

impl Problem for ProblemDef {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn n_var(&self) -> usize {
        self.n
    }

    fn n_obj(&self) -> usize {
        self.kind.n_obj()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.kind.objectives(x)
    }

    fn jacobian(&self, x: &[f64]) -> Matrix<f64> {
        let f = self.kind.objectives(&Dual::variables(x));
        let n = x.len();
        Matrix::from_vec(f.len(), n, f.into_iter().flat_map(|d| d.g).collect())
    }

    fn hessian_tensor(&self, x: &[f64]) -> Vec<Matrix<f64>> {
        self.derivatives(x).2
    }

    fn derivatives(&self, x: &[f64]) -> Derivatives {
        let n = x.len();
        let f = self.kind.objectives(&HyperDual::variables(x));
        let values = f.iter().map(|d| d.v).collect();
        let jac = Matrix::from_vec(f.len(), n, f.iter().flat_map(|d| d.g.iter().copied()).collect());
        let mut hess: Vec<Matrix<f64>> = f.into_iter().map(|d| Matrix::from_vec(n, n, d.h)).collect();
        hess.iter_mut().for_each(Matrix::symmetrize);
        (values, jac, hess)
    }

    fn inequality_constraints(&self) -> Option<&dyn ConstraintFn> {
        Some(&self.bounds)
    }

    fn front_sample(&self, count: usize) -> Option<ObjectivePointSet> {
        Some(fronts::sample(self.kind, count))
    }
}

/// `F` applied to every point of a stacked decision set.
pub fn evaluate_set(problem: &dyn Problem, x: &StackedDecision) -> Result<ObjectivePointSet> {
    let mut data = Vec::with_capacity(x.len() * problem.n_obj());
    for xi in x.iter() {
        data.extend(problem.evaluate(xi));
    }
    let y = ObjectivePointSet::new(problem.n_obj(), data);
    y.map_err(|_| Error::NonFinite(format!("objective values of {}", problem.name())))
}

/// Pareto-front discretization of `problem`.
pub fn front_sample(problem: &dyn Problem, count: usize) -> Result<ObjectivePointSet> {
    if count < 2 {
        return contract("front sample needs at least two points");
    }
    problem
        .front_sample(count)
        .ok_or_else(|| Error::Config(format!("problem {} has no known Pareto front", problem.name())))
}

/// Largest deviations between analytic and central-difference derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeReport {
    /// `max |J - J_fd| / max(1, |J_fd|)` over all entries.
    pub jacobian_error: f64,
    /// Same for the Hessian tensor against differences of the Jacobian.
    pub hessian_error: f64,
}

/// Compares `jacobian` and `hessian_tensor` with central differences of
/// `evaluate` and `jacobian` respectively, using step `step`.
pub fn check_derivatives(problem: &dyn Problem, x: &[f64], step: f64) -> DerivativeReport {
    let n = problem.n_var();
    let k = problem.n_obj();
    let (_, jac, hess) = problem.derivatives(x);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut jacobian_error: f64 = 0.0;
    let mut hessian_error: f64 = 0.0;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        let fp = problem.evaluate(&xp);
        let fm = problem.evaluate(&xm);
        let jp = problem.jacobian(&xp);
        let jm = problem.jacobian(&xm);
        for i in 0..k {
            let fd = (fp[i] - fm[i]) / (2.0 * step);
            jacobian_error = jacobian_error.max(rel(jac[(i, j)], fd));
            for r in 0..n {
                let fd2 = (jp[(i, r)] - jm[(i, r)]) / (2.0 * step);
                hessian_error = hessian_error.max(rel(hess[i][(r, j)], fd2));
            }
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    DerivativeReport { jacobian_error, hessian_error }
}
