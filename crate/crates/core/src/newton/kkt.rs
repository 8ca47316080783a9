//! Active sets, the KKT residual and its derivative.

use serde::{Deserialize, Serialize};

use super::NewtonState;
use crate::error::{contract, Result};
use crate::kernels::KernelSpec;
use crate::linalg::Matrix;
use crate::mmd::decision_model;
use crate::points::{ObjectivePointSet, StackedDecision};
use crate::problems::Problem;

/// Inequality `constraint` of decision point `point`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivePair {
    pub point: usize,
    pub constraint: usize,
}

/// All `(i, j)` with `g_j(x_i) > −tol`, point-major then by constraint index.
pub fn detect_active(x: &StackedDecision, problem: &dyn Problem, tol: f64) -> Result<Vec<ActivePair>> {
    if !(tol > 0.0) {
        return contract("activity tolerance must be positive");
    }
    let Some(g) = problem.inequality_constraints() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (point, xi) in x.iter().enumerate() {
        for (constraint, v) in g.eval(xi).into_iter().enumerate() {
            if v > -tol {
                out.push(ActivePair { point, constraint });
            }
        }
    }
    Ok(out)
}

/// Which constraint a row of `h̄` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RowSource {
    Equality(usize),
    Inequality(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Row {
    pub point: usize,
    pub source: RowSource,
}

/// Rows of `h̄` in multiplier order: per point, its equalities and then its
/// active inequalities.
pub(crate) fn constraint_rows(mu: usize, problem: &dyn Problem, active: &[ActivePair]) -> Vec<Row> {
    let p = problem.equality_constraints().map_or(0, |h| h.count());
    let mut rows = Vec::with_capacity(mu * p + active.len());
    let mut next = 0;
    for point in 0..mu {
        rows.extend((0..p).map(|j| Row { point, source: RowSource::Equality(j) }));
        while next < active.len() && active[next].point == point {
            rows.push(Row { point, source: RowSource::Inequality(active[next].constraint) });
            next += 1;
        }
    }
    rows
}

/// `h̄(X)`, its block-diagonal Jacobian `J` (`m x μn`) and, when some row
/// is nonlinear, the per-row Hessians (`n x n`, zero for linear rows).
pub(crate) struct ConstraintBlock {
    pub values: Vec<f64>,
    pub jacobian: Matrix<f64>,
    pub hessians: Option<Vec<Matrix<f64>>>,
}

pub(crate) fn assemble_constraints(x: &StackedDecision, problem: &dyn Problem, rows: &[Row]) -> ConstraintBlock {
    let n = x.dim();
    let mut values = Vec::with_capacity(rows.len());
    let mut jacobian = Matrix::zeros(rows.len(), x.len() * n);
    let mut hessians: Vec<Option<Matrix<f64>>> = Vec::with_capacity(rows.len());
    let mut cache_point = usize::MAX;
    let mut cache: [Option<(Vec<f64>, Matrix<f64>, Option<Vec<Matrix<f64>>>)>; 2] = [None, None];
    for (r, row) in rows.iter().enumerate() {
        if row.point != cache_point {
            cache = [None, None];
            cache_point = row.point;
        }
        let (slot, j, func) = match row.source {
            RowSource::Equality(j) => (0, j, problem.equality_constraints()),
            RowSource::Inequality(j) => (1, j, problem.inequality_constraints()),
        };
        let func = func.expect("row refers to an existing constraint function");
        let xi = x.point(row.point);
        let entry = cache[slot].get_or_insert_with(|| (func.eval(xi), func.jacobian(xi), func.hessians(xi)));
        values.push(entry.0[j]);
        jacobian.row_mut(r)[row.point * n..(row.point + 1) * n].copy_from_slice(entry.1.row(j));
        hessians.push(entry.2.as_ref().map(|h| h[j].clone()));
    }
    let hessians = if hessians.iter().any(Option::is_some) {
        Some(hessians.into_iter().map(|h| h.unwrap_or_else(|| Matrix::zeros(n, n))).collect())
    } else {
        None
    };
    ConstraintBlock { values, jacobian, hessians }
}

/// `S = Σ_j λ_j ∇²h̄_j`, block diagonal in `R^{μn x μn}`; `None` when every
/// active row is linear.
pub(crate) fn curvature_term(rows: &[Row], block: &ConstraintBlock, lambda: &[f64], mu: usize, n: usize) -> Option<Matrix<f64>> {
    let hs = block.hessians.as_ref()?;
    let mut s = Matrix::zeros(mu * n, mu * n);
    for ((row, h), &l) in rows.iter().zip(hs).zip(lambda) {
        let o = row.point * n;
        for a in 0..n {
            for b in 0..n {
                s[(o + a, o + b)] += l * h[(a, b)];
            }
        }
    }
    Some(s)
}

fn check_state(state: &NewtonState, problem: &dyn Problem) -> Result<Vec<Row>> {
    if state.x.dim() != problem.n_var() {
        return contract("state dimension does not match the problem");
    }
    let rows = constraint_rows(state.x.len(), problem, &state.active_set);
    if rows.len() != state.lambda.len() {
        return contract(format!("{} multipliers for {} constraint rows", state.lambda.len(), rows.len()));
    }
    Ok(rows)
}

/// `(∇MMD²(X) + Jᵀλ, h̄(X))`.
pub fn kkt_residual(state: &NewtonState, problem: &dyn Problem, r: &ObjectivePointSet, kernel: &KernelSpec) -> Result<Vec<f64>> {
    let rows = check_state(state, problem)?;
    let model = decision_model(&state.x, problem, r, kernel, false)?;
    let block = assemble_constraints(&state.x, problem, &rows);
    let mut top = model.gradient.stacked;
    for (t, v) in top.iter_mut().zip(block.jacobian.tr_matvec(&state.lambda)) {
        *t += v;
    }
    top.extend(block.values);
    Ok(top)
}

/// `[[∇²MMD² + S, Jᵀ], [J, 0]]`, unmodified (no preconditioning shift).
pub fn kkt_derivative(state: &NewtonState, problem: &dyn Problem, r: &ObjectivePointSet, kernel: &KernelSpec) -> Result<Matrix<f64>> {
    let rows = check_state(state, problem)?;
    let model = decision_model(&state.x, problem, r, kernel, true)?;
    let block = assemble_constraints(&state.x, problem, &rows);
    let (mu, n) = (state.x.len(), state.x.dim());
    let mut h = model.hessian.expect("requested").matrix;
    if let Some(s) = curvature_term(&rows, &block, &state.lambda, mu, n) {
        h = h.add(&s);
    }
    Ok(kkt_matrix(&h, &block.jacobian))
}

pub(crate) fn kkt_matrix(h: &Matrix<f64>, j: &Matrix<f64>) -> Matrix<f64> {
    let dim = h.rows();
    let m = j.rows();
    let mut k = Matrix::zeros(dim + m, dim + m);
    k.set_block(0, 0, h);
    if m > 0 {
        k.set_block(dim, 0, j);
        k.set_block(0, dim, &j.transpose());
    }
    k
}
