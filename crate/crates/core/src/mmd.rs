//! Squared maximum mean discrepancy between an approximation set `Y` and a
//! reference set `R`, with derivatives in objective and decision space.
//!
//! `MMD²(Y, R) = (1/μ²) Σ k(yi, yj) + (1/λ²) Σ k(ri, rj) − (2/μλ) Σ k(ri, yj)`
//! with all double sums running over every index pair (the V-statistic).

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

use crate::error::{contract, Error, Result};
use crate::kernels::{spectral_moments, KernelSpec};
use crate::linalg::Matrix;
use crate::points::{distance, squared_distance, ObjectivePointSet, PointSet, StackedDecision};
use crate::problems::Problem;
use crate::Scalar;

fn check_sets<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>) -> Result<()> {
    if y.is_empty() || r.is_empty() {
        return contract("MMD needs nonempty approximation and reference sets");
    }
    if y.dim() != r.dim() {
        return contract(format!("objective dimensions differ: {} vs {}", y.dim(), r.dim()));
    }
    Ok(())
}

fn pair_sum<T: Scalar>(a: &PointSet<T>, b: &PointSet<T>, kernel: &KernelSpec) -> T {
    let mut s = T::zero();
    for p in a.iter() {
        for q in b.iter() {
            s += kernel.value(p, q);
        }
    }
    s
}

/// Symmetric double sum over one set, each off-diagonal pair counted twice.
fn self_sum<T: Scalar>(a: &PointSet<T>, kernel: &KernelSpec) -> T {
    let mut off = T::zero();
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            off += kernel.value(a.point(i), a.point(j));
        }
    }
    off + off + T::from_count(a.len())
}

pub fn mmd_sq<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>, kernel: &KernelSpec) -> Result<T> {
    check_sets(y, r)?;
    Ok(mmd_sq_unchecked(y, r, kernel))
}

pub(crate) fn mmd_sq_unchecked<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>, kernel: &KernelSpec) -> T {
    let mu = T::from_count(y.len());
    let lam = T::from_count(r.len());
    self_sum(y, kernel) / (mu * mu) + self_sum(r, kernel) / (lam * lam)
        - T::c(2.0) * pair_sum(r, y, kernel) / (mu * lam)
}

/// `μ x k` matrix whose row `ℓ` is `∂MMD²/∂yℓ`.
pub fn mmd_grad_objective<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>, kernel: &KernelSpec) -> Result<Matrix<T>> {
    check_sets(y, r)?;
    Ok(grad_objective_unchecked(y, r, kernel))
}

fn grad_objective_unchecked<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>, kernel: &KernelSpec) -> Matrix<T> {
    let (mu, k) = (y.len(), y.dim());
    let wy = T::c(2.0) / T::from_count(mu * mu);
    let wr = T::c(2.0) / T::from_count(mu * r.len());
    let mut g = Matrix::zeros(mu, k);
    let mut tmp = vec![T::zero(); k];
    for l in 0..mu {
        let yl = y.point(l);
        let row = g.row_mut(l);
        for i in 0..mu {
            if i == l {
                continue;
            }
            kernel.grad_into(y.point(i), yl, &mut tmp);
            row.iter_mut().zip(&tmp).for_each(|(o, t)| *o += wy * *t);
        }
        for ri in r.iter() {
            kernel.grad_into(ri, yl, &mut tmp);
            row.iter_mut().zip(&tmp).for_each(|(o, t)| *o -= wr * *t);
        }
    }
    g
}

/// `μk x μk` Hessian of `MMD²` with respect to the stacked objective points.
pub fn mmd_hess_objective<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>, kernel: &KernelSpec) -> Result<Matrix<T>> {
    check_sets(y, r)?;
    Ok(hess_objective_unchecked(y, r, kernel))
}

fn hess_objective_unchecked<T: Scalar>(y: &PointSet<T>, r: &PointSet<T>, kernel: &KernelSpec) -> Matrix<T> {
    let (mu, k) = (y.len(), y.dim());
    let wy = T::c(2.0) / T::from_count(mu * mu);
    let wr = T::c(2.0) / T::from_count(mu * r.len());
    let mut h = Matrix::zeros(mu * k, mu * k);
    for l in 0..mu {
        let yl = y.point(l);
        for m in 0..mu {
            if m == l {
                continue;
            }
            // off-diagonal: mixed derivative, the negated same-point Hessian
            kernel.add_hess_to(y.point(m), yl, -wy, &mut h, m * k, l * k);
            kernel.add_hess_to(y.point(m), yl, wy, &mut h, l * k, l * k);
        }
        for ri in r.iter() {
            kernel.add_hess_to(ri, yl, -wr, &mut h, l * k, l * k);
        }
    }
    h.symmetrize();
    h
}

/// `∇MMD²` with respect to the stacked decision vector, `R^{μn}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmdGradient {
    pub stacked: Vec<f64>,
    /// The objective-space rows it was built from, `μ x k`.
    pub objective: Matrix<f64>,
    pub kernel: KernelSpec,
    pub mu: usize,
    pub lambda: usize,
}

/// `∇²MMD²` with respect to the stacked decision vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MmdHessian {
    pub matrix: Matrix<f64>,
    pub mu: usize,
    pub n: usize,
}

impl MmdHessian {
    pub fn block(&self, m: usize, l: usize) -> Matrix<f64> {
        self.matrix.block(m * self.n, l * self.n, self.n, self.n)
    }
}

/// Everything the Newton step needs at one stacked decision point.
#[derive(Clone, Debug)]
pub struct DecisionModel {
    pub y: ObjectivePointSet,
    pub value: f64,
    pub gradient: MmdGradient,
    pub hessian: Option<MmdHessian>,
}

fn check_decision(x: &StackedDecision, problem: &dyn Problem, r: &ObjectivePointSet) -> Result<()> {
    if x.dim() != problem.n_var() {
        return contract(format!("decision points have dimension {}, problem expects {}", x.dim(), problem.n_var()));
    }
    if r.dim() != problem.n_obj() {
        return contract(format!("reference points have dimension {}, problem has {} objectives", r.dim(), problem.n_obj()));
    }
    if x.is_empty() {
        return contract("empty decision set");
    }
    Ok(())
}

/// Evaluates `F`, `DF` and (optionally) `D²F` at every point and assembles
/// the MMD value, gradient and Hessian in decision space.
pub fn decision_model(
    x: &StackedDecision,
    problem: &dyn Problem,
    r: &ObjectivePointSet,
    kernel: &KernelSpec,
    with_hessian: bool,
) -> Result<DecisionModel> {
    check_decision(x, problem, r)?;
    let (mu, n, k) = (x.len(), problem.n_var(), problem.n_obj());
    let mut ydata = Vec::with_capacity(mu * k);
    let mut jacs = Vec::with_capacity(mu);
    let mut tensors = Vec::with_capacity(mu);
    for xi in x.iter() {
        if with_hessian {
            let (f, j, h) = problem.derivatives(xi);
            ydata.extend(f);
            jacs.push(j);
            tensors.push(h);
        } else {
            ydata.extend(problem.evaluate(xi));
            jacs.push(problem.jacobian(xi));
        }
    }
    let y = ObjectivePointSet::new(k, ydata)
        .map_err(|_| Error::NonFinite(format!("objective values of {}", problem.name())))?;
    if jacs.iter().any(|j| !j.is_finite()) || tensors.iter().flatten().any(|h| !h.is_finite()) {
        return Err(Error::NonFinite(format!("derivatives of {}", problem.name())));
    }
    let value = mmd_sq_unchecked(&y, r, kernel);
    let gobj = grad_objective_unchecked(&y, r, kernel);
    let mut stacked = Vec::with_capacity(mu * n);
    for (l, jac) in jacs.iter().enumerate() {
        stacked.extend(jac.tr_matvec(gobj.row(l)));
    }

    let hessian = with_hessian.then(|| {
        let hobj = hess_objective_unchecked(&y, r, kernel);
        let mut h = Matrix::zeros(mu * n, mu * n);
        for m in 0..mu {
            // DF(xm)ᵀ H^m_ℓ, reused across ℓ
            for l in 0..mu {
                let hml = hobj.block(m * k, l * k, k, k);
                let block = jacs[m].tr_matmul(&hml.matmul(&jacs[l]));
                h.set_block(m * n, l * n, &block);
            }
            let row = gobj.row(m);
            let mut curvature = Matrix::zeros(n, n);
            for (j, hj) in tensors[m].iter().enumerate() {
                curvature.add_scaled(row[j], hj);
            }
            let diag = h.block(m * n, m * n, n, n).add(&curvature);
            h.set_block(m * n, m * n, &diag);
        }
        h.symmetrize();
        MmdHessian { matrix: h, mu, n }
    });

    Ok(DecisionModel {
        y,
        value,
        gradient: MmdGradient { stacked, objective: gobj, kernel: *kernel, mu, lambda: r.len() },
        hessian,
    })
}

pub fn mmd_grad_decision(
    x: &StackedDecision,
    problem: &dyn Problem,
    r: &ObjectivePointSet,
    kernel: &KernelSpec,
) -> Result<MmdGradient> {
    Ok(decision_model(x, problem, r, kernel, false)?.gradient)
}

pub fn mmd_hess_decision(
    x: &StackedDecision,
    problem: &dyn Problem,
    r: &ObjectivePointSet,
    kernel: &KernelSpec,
) -> Result<MmdHessian> {
    Ok(decision_model(x, problem, r, kernel, true)?.hessian.expect("requested"))
}

/// Eigenvalue enclosures for the blocks of the objective-space Hessian of a
/// Gaussian-kernel MMD with `μ = λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumBounds {
    pub mu: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Per point `ℓ`, the radius `R_ℓ`; the whole spectrum lies in `∪ [−R_ℓ, R_ℓ]`.
    pub radii: Vec<f64>,
}

impl SpectrumBounds {
    /// `(lower, upper)` for block `(m, ℓ)`.
    pub fn block(&self, m: usize, l: usize) -> (f64, f64) {
        (self.lower[m * self.mu + l], self.upper[m * self.mu + l])
    }
}

pub fn hessian_block_bounds(y: &ObjectivePointSet, r: &ObjectivePointSet, kernel: &KernelSpec) -> Result<SpectrumBounds> {
    check_sets(y, r)?;
    if y.len() != r.len() {
        return contract(format!("spectrum bounds need equal set sizes, got {} and {}", y.len(), r.len()));
    }
    let sm = spectral_moments::<f64>(kernel, y.dim())?;
    let mu = y.len();
    let muf = mu as f64;
    let mut lower = vec![0.0; mu * mu];
    let mut upper = vec![0.0; mu * mu];
    let mut radii = Vec::with_capacity(mu);
    for l in 0..mu {
        let yl = y.point(l);
        let d2r = r.iter().map(|ra| squared_distance(ra, yl)).sum::<f64>() / muf;
        let d2y = (0..mu).filter(|&b| b != l).map(|b| squared_distance(y.point(b), yl)).sum::<f64>() / muf;
        for m in 0..mu {
            let idx = m * mu + l;
            if m == l {
                lower[idx] = 2.0 / muf * (sm.sigma_min_c - sm.m2 - sm.m4 / 2.0 * d2r);
                upper[idx] = 2.0 / muf * (sm.m2 - sm.sigma_min_c + sm.m4 / 2.0 * d2y);
            } else {
                lower[idx] = 2.0 / (muf * muf) * (sm.sigma_min_c - sm.m4 / 2.0 * squared_distance(y.point(m), yl));
                upper[idx] = 2.0 / (muf * muf) * sm.m2;
            }
        }
        radii.push(2.0 / (muf * muf) * ((2.0 * muf - 1.0) * sm.m2 - sm.sigma_min_c) + sm.m4 / muf * (d2r + d2y));
    }
    Ok(SpectrumBounds { mu, lower, upper, radii })
}

/// Upper bound on `‖∂MMD²/∂yℓ‖₂` for Gaussian kernels with `μ = λ`:
/// `(2/μ)(D̄(yℓ, Y) + D̄(yℓ, R)) m2`, `D̄` being mean Euclidean distances
/// (over the other points of `Y`, and over all of `R`).
pub fn gradient_row_bound(y: &ObjectivePointSet, r: &ObjectivePointSet, kernel: &KernelSpec, l: usize) -> Result<f64> {
    check_sets(y, r)?;
    let sm = spectral_moments::<f64>(kernel, y.dim())?;
    let mu = y.len() as f64;
    let yl = y.point(l);
    let dy = (0..y.len()).filter(|&b| b != l).map(|b| distance(y.point(b), yl)).sum::<f64>() / mu;
    let dr = r.iter().map(|ra| distance(ra, yl)).sum::<f64>() / mu;
    Ok(2.0 / mu * (dy + dr) * sm.m2)
}

/// Monte-Carlo estimate of the normal-space slope of a bi-objective
/// stationary point, with its delta-method standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub denominator: f64,
    pub denominator_stderr: f64,
}

/// `λ = E[ν₂ D(ν)] / E[ν₁ D(ν)]` with `ν ~ N(0, I₂)` and
/// `D(ν) = Σ_r sin(√(2θ) ⟨ν, r − y⟩)`.
pub fn kkt_slope_estimate(r: &ObjectivePointSet, y: &[f64], theta: f64, samples: usize, seed: u64) -> Result<f64> {
    Ok(kkt_slope_estimate_detailed(r, y, theta, samples, seed)?.slope)
}

pub fn kkt_slope_estimate_detailed(
    r: &ObjectivePointSet,
    y: &[f64],
    theta: f64,
    samples: usize,
    seed: u64,
) -> Result<SlopeEstimate> {
    if r.dim() != 2 || y.len() != 2 {
        return contract("slope estimate is defined for two objectives");
    }
    if r.is_empty() {
        return contract("empty reference set");
    }
    if samples < 100_000 {
        return contract(format!("slope estimate needs at least 1e5 samples, got {samples}"));
    }
    if !(theta > 0.0) {
        return contract("length-scale must be positive");
    }
    let scale = (2.0 * theta).sqrt();
    let offsets: Vec<[f64; 2]> = r.iter().map(|p| [scale * (p[0] - y[0]), scale * (p[1] - y[1])]).collect();
    let mut rng = Pcg64::seed_from_u64(seed);
    let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let n1: f64 = StandardNormal.sample(&mut rng);
        let n2: f64 = StandardNormal.sample(&mut rng);
        let d: f64 = offsets.iter().map(|o| (n1 * o[0] + n2 * o[1]).sin()).sum();
        let (a, b) = (n1 * d, n2 * d);
        s1 += a;
        s2 += b;
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
    }
    let n = samples as f64;
    let (den, num) = (s1 / n, s2 / n);
    let var_den = (s11 / n - den * den).max(0.0);
    let var_num = (s22 / n - num * num).max(0.0);
    let cov = s12 / n - den * num;
    let den_se = (var_den / n).sqrt();
    if den.abs() <= 3.0 * den_se {
        return Err(Error::IllConditionedRatio { value: den, stderr: den_se });
    }
    let slope = num / den;
    let var_ratio = (var_num + slope * slope * var_den - 2.0 * slope * cov).max(0.0) / (den * den);
    Ok(SlopeEstimate { slope, stderr: (var_ratio / n).sqrt(), denominator: den, denominator_stderr: den_se })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[[f64; 2]]) -> ObjectivePointSet {
        ObjectivePointSet::from_points(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_sets_have_zero_discrepancy() {
        let y = set(&[[0.1, 0.9], [0.5, 0.5], [0.9, 0.1]]);
        for kernel in [KernelSpec::gaussian(3.0).unwrap(), KernelSpec::laplace(0.5).unwrap()] {
            assert!(mmd_sq(&y, &y, &kernel).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn single_pair_by_hand() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let v = mmd_sq(&set(&[[0.0, 0.0]]), &set(&[[1.0, 0.0]]), &g).unwrap();
        assert!((v - (2.0 - 2.0 / std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn empty_or_mismatched_sets_are_rejected() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let y = set(&[[0.0, 0.0]]);
        assert!(mmd_sq(&y, &ObjectivePointSet::empty(2), &g).is_err());
        let r3 = ObjectivePointSet::from_points(&[vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(mmd_grad_objective(&y, &r3, &g).is_err());
    }

    #[test]
    fn symmetric_configuration_is_stationary() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let y = set(&[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]);
        let r = set(&[[0.0, 1.0], [0.0, -1.0]]);
        let grad = mmd_grad_objective(&y, &r, &g).unwrap();
        assert!(grad.row(0).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn single_point_hessian_is_reference_sum() {
        let g = KernelSpec::gaussian(0.7).unwrap();
        let y = set(&[[0.2, 0.3]]);
        let r = set(&[[0.0, 1.0], [1.0, 0.0]]);
        let h = mmd_hess_objective(&y, &r, &g).unwrap();
        let mut expect = Matrix::zeros(2, 2);
        for ri in r.iter() {
            expect.add_scaled(-1.0, &g.hess(ri, y.point(0)));
        }
        assert!(h.sub(&expect).max_abs() < 1e-15);
    }

    #[test]
    fn slope_needs_enough_samples() {
        let r = set(&[[1.0, 1.0]]);
        assert!(kkt_slope_estimate(&r, &[0.0, 0.0], 1.0, 10, 0).is_err());
    }
}
