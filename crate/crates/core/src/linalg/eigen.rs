//! Symmetric eigensolver: Householder tridiagonalization followed by the
//! implicit QL iteration (the EISPACK `tred2`/`tql2` pair).

use super::{cholesky, tol, LinalgError, LinalgResult, Matrix};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct SymEigResult<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: Matrix<T>,
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> LinalgResult<SymEigResult<T>> {
    let a = a.symmetrized()?;
    let (values, vectors) = decompose(a, true)?;
    Ok(SymEigResult { eigenvalues: values, eigenvectors: vectors })
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues<T: Scalar>(a: &Matrix<T>) -> LinalgResult<Vec<T>> {
    let a = a.symmetrized()?;
    Ok(decompose(a, false)?.0)
}

/// Spectral condition number `max eig / min eig` of an SPD matrix.
///
/// Positive definiteness is verified with a Cholesky factorization first.
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> LinalgResult<T> {
    cholesky(a)?;
    let ev = sym_eigenvalues(a)?;
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if !(lo > T::zero()) {
        return Err(LinalgError::NotPositiveDefinite { pivot: 0, value: lo.to_f64_lossy() });
    }
    Ok(hi / lo)
}

fn decompose<T: Scalar>(a: Matrix<T>, want_vectors: bool) -> LinalgResult<(Vec<T>, Matrix<T>)> {
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let mut v = a;
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e, want_vectors)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = if want_vectors {
        Matrix::from_fn(n, n, |r, c| v[(r, order[c])])
    } else {
        Matrix::zeros(0, 0)
    };
    Ok((values, vectors))
}

fn tred2<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

fn tql2<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T], want_vectors: bool) -> LinalgResult<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > tol::EIGEN_MAX_SWEEPS {
                    return Err(LinalgError::NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::c(2.0) * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            let hk = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * hk;
                            v[(k, i)] = c * v[(k, i)] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    fn random_sym(n: usize, rng: &mut Pcg64) -> Matrix<f64> {
        let mut a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        a = a.add(&a.transpose());
        a
    }

    #[test]
    fn diagonal_values_sorted() {
        let ev = sym_eigenvalues(&Matrix::<f64>::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(ev, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ev = sym_eigenvalues(&a).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_identity_and_eigen_equation() {
        let mut rng = Pcg64::seed_from_u64(17);
        for n in [1, 2, 3, 6, 15] {
            let a = random_sym(n, &mut rng);
            let SymEigResult { eigenvalues, eigenvectors: q } = sym_eigen(&a).unwrap();
            let sum: f64 = eigenvalues.iter().sum();
            assert!((sum - a.trace()).abs() <= 1e-10);
            assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            assert!(q.tr_matmul(&q).sub(&Matrix::identity(n)).max_abs() <= 1e-10);
            let aq = a.matmul(&q);
            let qd = q.matmul(&Matrix::from_diag(&eigenvalues));
            assert!(aq.sub(&qd).max_abs() <= 1e-8 * a.max_abs().max(1.0));
            let vals_only = sym_eigenvalues(&a).unwrap();
            for (x, y) in vals_only.iter().zip(&eigenvalues) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(condition_number(&Matrix::<f64>::identity(4)).unwrap(), 1.0);
        assert!((condition_number(&Matrix::<f64>::from_diag(&[10.0, 1.0])).unwrap() - 10.0).abs() < 1e-12);
        let (c, s) = (0.6f64, 0.8f64);
        let q = Matrix::from_rows(&[vec![c, -s], vec![s, c]]);
        let a = q.matmul(&Matrix::from_diag(&[2.0, 8.0])).matmul(&q.transpose());
        assert!((condition_number(&a).unwrap() - 4.0).abs() < 1e-10);
        assert!(condition_number(&Matrix::from_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(matches!(sym_eigenvalues(&a), Err(LinalgError::Asymmetric { .. })));
    }
}
