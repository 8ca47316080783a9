use super::{LinalgError, LinalgResult, Matrix};
use crate::Scalar;

/// Cholesky factor `L` (lower triangular) with `L L^T = A`.
///
/// The input must be symmetric to within [`super::tol::SYMMETRY_REL`]; it is
/// symmetrized before factoring. A non-positive pivot yields
/// [`LinalgError::NotPositiveDefinite`], which callers use as the
/// "indefinite" signal.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> LinalgResult<Matrix<T>> {
    let a = a.symmetrized()?;
    cholesky_unchecked(&a)
}

/// Factorization without the symmetry check; reads the lower triangle only.
pub(crate) fn cholesky_unchecked<T: Scalar>(a: &Matrix<T>) -> LinalgResult<Matrix<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - super::dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > T::zero()) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d.to_f64_lossy() });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let s = a[(i, j)] - super::dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the Cholesky factor.
pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    assert_eq!(b.len(), n, "cholesky_solve dimension");
    let mut y = b.to_vec();
    for i in 0..n {
        let row = l.row(i);
        let mut s = y[i];
        for k in 0..i {
            s -= row[k] * y[k];
        }
        y[i] = s / row[i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn random_spd(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = Pcg64::seed_from_u64(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = b.tr_matmul(&b);
        a.add_to_diagonal(1.0);
        a
    }

    #[test]
    fn identity_factor_is_identity() {
        let i3 = Matrix::<f64>::identity(3);
        assert_eq!(cholesky(&i3).unwrap(), i3);
    }

    #[test]
    fn negative_pivot_signals_failure() {
        let a = Matrix::from_diag(&[-1.0, 2.0]);
        assert!(matches!(cholesky(&a), Err(LinalgError::NotPositiveDefinite { pivot: 0, .. })));
    }

    #[test]
    fn random_spd_reconstructs() {
        let a = random_spd(5, 7);
        let l = cholesky(&a).unwrap();
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
        let rec = l.matmul(&l.transpose());
        let err = rec.sub(&a).frobenius_norm() / a.frobenius_norm();
        assert!(err <= 1e-10, "relative error {err}");
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(cholesky(&a), Err(LinalgError::NotSquare { .. })));
        let b = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]);
        assert!(matches!(cholesky(&b), Err(LinalgError::Asymmetric { .. })));
    }

    #[test]
    fn solve_with_factor() {
        let a = random_spd(6, 11);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let b = a.matvec(&x);
        let l = cholesky(&a).unwrap();
        let got = cholesky_solve(&l, &b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-6);
        assert!((l[(1, 1)] - 2f32.sqrt()).abs() < 1e-6);
    }
}
