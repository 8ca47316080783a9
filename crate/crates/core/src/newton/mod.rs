//! The MMD-Newton solver.
//!
//! Each iteration evaluates `F`, `DF` and `D²F` at all `μ` points, detects
//! the active inequalities, solves the (preconditioned) KKT system for a
//! joint step in `(X, λ)` and backtracks on a merit function. Trial points
//! are always projected into the problem's box.
//!
//! When every constraint row is a bound on a single variable (the benchmark
//! case), the KKT system is solved by eliminating the pinned variables: the
//! pinned coordinates move to their bounds, the free coordinates solve the
//! reduced Newton system and the multipliers are read back from the pinned
//! rows. This gives the same step as the dense saddle-point solve when both
//! use the same Hessian shift. Active bounds whose first-order multiplier
//! estimate is negative (the descent direction points into the box) are
//! released rather than pinned.

mod kkt;
mod step;

use serde::{Deserialize, Serialize};

pub use kkt::{detect_active, kkt_derivative, kkt_residual, ActivePair};
pub use step::{
    armijo_along, armijo_backtrack, precondition, LineSearch, PreconditionResult, ARMIJO_C1, ARMIJO_MAX_HALVINGS,
    PRECONDITION_BETA, PRECONDITION_MAX_ATTEMPTS,
};

use kkt::{assemble_constraints, ConstraintBlock, constraint_rows, curvature_term, kkt_matrix, Row, RowSource};

use crate::error::{contract, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{cholesky_solve, dot, solve, Matrix};
use crate::mmd::{decision_model, mmd_sq};
use crate::points::{ObjectivePointSet, StackedDecision};
use crate::problems::{evaluate_set, Problem};

/// How inequality constraints enter the step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    /// Active inequalities are treated as equalities in the KKT system.
    #[default]
    ActiveSet,
    /// Unconstrained Newton steps, projected into the box.
    Clip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    /// `N₂`.
    pub max_iter: usize,
    pub eps: f64,
    pub active_tol: f64,
    pub mode: ConstraintMode,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { max_iter: 5, eps: 1e-6, active_tol: 1e-6, mode: ConstraintMode::ActiveSet }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonState {
    pub x: StackedDecision,
    /// One multiplier per constraint row: per point, its equalities and then
    /// its active inequalities.
    pub lambda: Vec<f64>,
    pub active_set: Vec<ActivePair>,
    pub iteration: usize,
    /// Norm of the KKT residual at the last evaluated iterate; equals
    /// `‖∇MMD²‖₂` when no constraint is active.
    pub grad_norm: f64,
}

impl NewtonState {
    pub fn new(x: StackedDecision) -> Self {
        Self { x, lambda: Vec::new(), active_set: Vec::new(), iteration: 0, grad_norm: f64::INFINITY }
    }
}

/// Function-evaluation counts, per decision point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub plain: u64,
    pub jacobian: u64,
    pub hessian: u64,
}

impl std::ops::AddAssign for CallCounts {
    fn add_assign(&mut self, o: Self) {
        self.plain += o.plain;
        self.jacobian += o.jacobian;
        self.hessian += o.hessian;
    }
}

/// One line of the iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `MMD²` at the start of the iteration.
    pub mmd: f64,
    pub grad_norm: f64,
    /// Directional derivative of the merit along the step.
    pub slope: f64,
    pub step: f64,
    pub tau: f64,
    pub cholesky_attempts: usize,
    pub active: usize,
    /// Merit after the accepted step.
    pub merit: f64,
    pub calls: CallCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason", content = "detail")]
pub enum StopReason {
    Converged,
    MaxIterations,
    Stalled,
    SolveFailed(String),
}

#[derive(Clone, Debug)]
pub struct NewtonRun {
    pub state: NewtonState,
    pub trace: Vec<IterationRecord>,
    /// `F[X]` at the final iterate.
    pub y: ObjectivePointSet,
    /// `MMD²(F[X], R)` at the final iterate.
    pub mmd: f64,
    pub stop: StopReason,
    pub calls: CallCounts,
}

/// Clamps every point into the problem's box.
pub fn project_into_box(x: &mut StackedDecision, problem: &dyn Problem) {
    let (lo, hi) = (problem.lower(), problem.upper());
    for i in 0..x.len() {
        for (v, (l, h)) in x.point_mut(i).iter_mut().zip(lo.iter().zip(hi)) {
            *v = v.clamp(*l, *h);
        }
    }
}

/// Runs at most `max_iter` Newton iterations with the default configuration
/// otherwise.
pub fn mmdn_run(
    x0: &StackedDecision,
    problem: &dyn Problem,
    r: &ObjectivePointSet,
    kernel: &KernelSpec,
    max_iter: usize,
    eps: f64,
) -> Result<NewtonRun> {
    let cfg = NewtonConfig { max_iter, eps, ..NewtonConfig::default() };
    mmdn_run_with(x0, problem, r, kernel, &cfg)
}

struct Step {
    d: Vec<f64>,
    lambda: Vec<f64>,
    tau: f64,
    attempts: usize,
    slope: f64,
    /// Penalty weight on `‖h̄‖₁`, zero when the merit is `MMD²` alone.
    rho: f64,
}

pub fn mmdn_run_with(
    x0: &StackedDecision,
    problem: &dyn Problem,
    r: &ObjectivePointSet,
    kernel: &KernelSpec,
    cfg: &NewtonConfig,
) -> Result<NewtonRun> {
    if !(cfg.eps > 0.0) {
        return contract("eps must be positive");
    }
    if x0.dim() != problem.n_var() || x0.is_empty() {
        return contract("initial set does not match the problem dimension");
    }
    let mu = x0.len() as u64;
    let mut x = x0.clone();
    project_into_box(&mut x, problem);
    let mut state = NewtonState::new(x);
    let mut trace = Vec::new();
    let mut total = CallCounts::default();
    let mut stop = StopReason::MaxIterations;
    let mut current: Option<(ObjectivePointSet, f64)> = None;

    while state.iteration < cfg.max_iter {
        let model = decision_model(&state.x, problem, r, kernel, true)?;
        let mut calls = CallCounts { plain: 0, jacobian: mu, hessian: mu };
        let g = &model.gradient.stacked;
        current = Some((model.y.clone(), model.value));

        update_active_set(&mut state, problem, g, cfg)?;
        let rows = constraint_rows(state.x.len(), problem, &state.active_set);
        let block = assemble_constraints(&state.x, problem, &rows);
        let pinned = pinned_coordinates(problem, &rows, &block, state.x.dim());
        if let Some(p) = &pinned {
            state.lambda = p.iter().map(|&(idx, a)| -g[idx] / a).collect();
        }
        let mut stationarity = g.clone();
        for (s, v) in stationarity.iter_mut().zip(block.jacobian.tr_matvec(&state.lambda)) {
            *s += v;
        }
        state.grad_norm = (dot(&stationarity, &stationarity) + dot(&block.values, &block.values)).sqrt();

        if state.grad_norm <= cfg.eps {
            stop = StopReason::Converged;
            total += calls;
            break;
        }

        let hess = &model.hessian.as_ref().expect("requested").matrix;
        let step = match compute_step(&state, hess, g, &rows, &block, pinned.as_deref()) {
            Ok(s) => s,
            Err(e) => {
                total += calls;
                stop = StopReason::SolveFailed(e.to_string());
                break;
            }
        };

        let h1 = block.values.iter().map(|v| v.abs()).sum::<f64>();
        let f0 = model.value + step.rho * h1;
        if !(step.slope < 0.0) {
            total += calls;
            stop = StopReason::Stalled;
            trace.push(record(&state, &model.value, &step, 0.0, f0, rows.len(), calls));
            break;
        }

        let mut last_trial: Option<(StackedDecision, ObjectivePointSet, f64)> = None;
        let ls = armijo_along(
            |s| {
                calls.plain += mu;
                let mut xt = state.x.clone();
                for (v, d) in xt.as_flat_mut().iter_mut().zip(&step.d) {
                    *v += s * d;
                }
                project_into_box(&mut xt, problem);
                let Ok(yt) = evaluate_set(problem, &xt) else {
                    return f64::NAN;
                };
                let value = mmd_sq(&yt, r, kernel).unwrap_or(f64::NAN);
                let penalty = if step.rho > 0.0 {
                    let b = assemble_constraints(&xt, problem, &rows);
                    step.rho * b.values.iter().map(|v| v.abs()).sum::<f64>()
                } else {
                    0.0
                };
                last_trial = Some((xt, yt, value));
                value + penalty
            },
            f0,
            step.slope,
        )?;
        total += calls;
        trace.push(record(&state, &model.value, &step, ls.step, ls.value, rows.len(), calls));
        if ls.stalled {
            stop = StopReason::Stalled;
            break;
        }
        let (xt, yt, value) = last_trial.expect("accepted trial was evaluated");
        state.x = xt;
        state.lambda = step.lambda;
        state.iteration += 1;
        current = Some((yt, value));
    }

    let (y, mmd) = match current {
        Some(c) => c,
        None => {
            total.plain += mu;
            let y = evaluate_set(problem, &state.x)?;
            let v = mmd_sq(&y, r, kernel)?;
            (y, v)
        }
    };
    Ok(NewtonRun { state, trace, y, mmd, stop, calls: total })
}

fn record(state: &NewtonState, mmd: &f64, step: &Step, s: f64, merit: f64, active: usize, calls: CallCounts) -> IterationRecord {
    IterationRecord {
        iteration: state.iteration,
        mmd: *mmd,
        grad_norm: state.grad_norm,
        slope: step.slope,
        step: s,
        tau: step.tau,
        cholesky_attempts: step.attempts,
        active,
        merit,
        calls,
    }
}

fn update_active_set(state: &mut NewtonState, problem: &dyn Problem, g: &[f64], cfg: &NewtonConfig) -> Result<()> {
    let old: Vec<(Row, f64)> = constraint_rows(state.x.len(), problem, &state.active_set)
        .into_iter()
        .zip(state.lambda.iter().copied())
        .collect();
    let mut active = match cfg.mode {
        ConstraintMode::Clip => Vec::new(),
        ConstraintMode::ActiveSet => detect_active(&state.x, problem, cfg.active_tol)?,
    };
    if let Some(ineq) = problem.inequality_constraints() {
        let n = state.x.dim();
        active.retain(|p| match ineq.bound(p.constraint) {
            Some((var, _)) => {
                let a = ineq.jacobian(state.x.point(p.point))[(p.constraint, var)];
                -g[p.point * n + var] / a >= 0.0
            }
            None => true,
        });
    }
    state.active_set = active;
    let rows = constraint_rows(state.x.len(), problem, &state.active_set);
    state.lambda = rows
        .iter()
        .map(|row| old.iter().find(|(o, _)| o == row).map_or(0.0, |(_, l)| *l))
        .collect();
    Ok(())
}

/// For bound-only constraint rows: `(stacked index, ∂h̄/∂x at that index)`.
fn pinned_coordinates(problem: &dyn Problem, rows: &[Row], block: &ConstraintBlock, n: usize) -> Option<Vec<(usize, f64)>> {
    if rows.is_empty() {
        return None;
    }
    let ineq = problem.inequality_constraints();
    let mut out = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let RowSource::Inequality(j) = row.source else {
            return None;
        };
        let (var, _) = ineq?.bound(j)?;
        let idx = row.point * n + var;
        if out.iter().any(|&(i, _)| i == idx) {
            return None;
        }
        out.push((idx, block.jacobian[(r, idx)]));
    }
    Some(out)
}

fn compute_step(
    state: &NewtonState,
    hess: &Matrix<f64>,
    g: &[f64],
    rows: &[Row],
    block: &ConstraintBlock,
    pinned: Option<&[(usize, f64)]>,
) -> Result<Step> {
    let dim = g.len();
    if rows.is_empty() {
        let pre = precondition(hess)?;
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let d = cholesky_solve(&pre.cholesky_factor, &neg_g);
        let slope = dot(g, &d);
        return Ok(Step { d, lambda: Vec::new(), tau: pre.tau, attempts: pre.attempts, slope, rho: 0.0 });
    }

    if let Some(pinned) = pinned {
        let mut d = vec![0.0; dim];
        let mut is_pinned = vec![false; dim];
        for (r, &(idx, a)) in pinned.iter().enumerate() {
            d[idx] = -block.values[r] / a;
            is_pinned[idx] = true;
        }
        let free: Vec<usize> = (0..dim).filter(|&i| !is_pinned[i]).collect();
        let hd_pinned = hess.matvec(&d);
        let mut tau = 0.0;
        let mut attempts = 0;
        if !free.is_empty() {
            let pre = precondition(&hess.select(&free))?;
            let rhs: Vec<f64> = free.iter().map(|&i| -(g[i] + hd_pinned[i])).collect();
            let df = cholesky_solve(&pre.cholesky_factor, &rhs);
            for (&i, v) in free.iter().zip(df) {
                d[i] = v;
            }
            tau = pre.tau;
            attempts = pre.attempts;
        }
        let hd = hess.matvec(&d);
        let lambda = pinned.iter().map(|&(idx, a)| -(g[idx] + hd[idx] + tau * d[idx]) / a).collect();
        let slope = dot(g, &d);
        return Ok(Step { d, lambda, tau, attempts, slope, rho: 0.0 });
    }

    let (mu, n) = (state.x.len(), state.x.dim());
    let mut k = hess.clone();
    if let Some(s) = curvature_term(rows, block, &state.lambda, mu, n) {
        k = k.add(&s);
    }
    let pre = precondition(&k)?;
    k.add_to_diagonal(pre.tau);
    let m = kkt_matrix(&k, &block.jacobian);
    let rhs: Vec<f64> = g.iter().chain(&block.values).map(|v| -v).collect();
    let sol = solve(&m, &rhs)?;
    let d = sol[..dim].to_vec();
    let lambda = sol[dim..].to_vec();
    let lmax = lambda.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let rho = (2.0 * lmax).max(1.0);
    let slope = dot(g, &d) - rho * block.values.iter().map(|v| v.abs()).sum::<f64>();
    Ok(Step { d, lambda, tau: pre.tau, attempts: pre.attempts, slope, rho })
}
