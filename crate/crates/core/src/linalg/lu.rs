use super::{tol, LinalgError, LinalgResult, Matrix};
use crate::Scalar;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    norm1: T,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> LinalgResult<Self> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        if !a.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let n = a.rows();
        let norm1 = a.norm1();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::neg_infinity()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if pmax == T::zero() {
                return Err(LinalgError::Singular { condition: f64::INFINITY });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            let pivot_row: Vec<T> = lu.row(k)[k + 1..].to_vec();
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    let row = &mut lu.row_mut(i)[k + 1..];
                    for (r, &u) in row.iter_mut().zip(&pivot_row) {
                        *r -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "lu solve dimension");
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = y[i];
            for k in 0..i {
                s -= row[k] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = y[i];
            for k in i + 1..n {
                s -= row[k] * y[k];
            }
            y[i] = s / row[i];
        }
        y
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "lu solve dimension");
        // A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lu[(k, i)] * z[k];
            }
            z[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.lu[(k, i)] * z[k];
            }
            z[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    /// 1-norm condition estimate `|A|_1 |A^-1|_1` (Hager's method).
    pub fn condition_estimate(&self) -> T {
        let n = self.dim();
        if n == 0 {
            return T::one();
        }
        let mut x = vec![T::one() / T::from_count(n); n];
        let mut est = T::zero();
        for _ in 0..5 {
            let y = self.solve(&x);
            let y_norm: T = y.iter().map(|v| v.abs()).sum();
            if !y_norm.is_finite() {
                return T::infinity();
            }
            let xi: Vec<T> = y.iter().map(|&v| if v >= T::zero() { T::one() } else { -T::one() }).collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.abs()))
                .fold((0, T::neg_infinity()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let zx = super::dot(&z, &x);
            if y_norm <= est || zmax <= zx {
                est = est.max(y_norm);
                break;
            }
            est = y_norm;
            x = vec![T::zero(); n];
            x[j] = T::one();
        }
        est * self.norm1
    }
}

/// Solves `A x = b` for square nonsingular `A`.
///
/// Rejects systems whose 1-norm condition estimate reaches
/// [`tol::MAX_CONDITION`]; one step of iterative refinement is applied.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> LinalgResult<Vec<T>> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {}",
            a.rows(),
            b.len()
        )));
    }
    let lu = Lu::factor(a)?;
    let cond = lu.condition_estimate();
    if !(cond < T::c(tol::MAX_CONDITION)) {
        return Err(LinalgError::Singular { condition: cond.to_f64_lossy() });
    }
    let mut x = lu.solve(b);
    let ax = a.matvec(&x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let dx = lu.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(solve(&Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_diag(&[2.0, 4.0]);
        assert_eq!(solve(&a, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn recovers_manufactured_solution() {
        let mut rng = Pcg64::seed_from_u64(3);
        let mut a = Matrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
        a.add_to_diagonal(4.0);
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b = a.matvec(&x);
        let got = solve(&a, &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() <= 1e-8, "{g} vs {e}");
        }
        let res: Vec<f64> = a.matvec(&got).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&res) / norm2(&b) <= 1e-8);
    }

    #[test]
    fn singular_matrix_reports_condition() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        match solve(&a, &[1.0, 1.0]) {
            Err(LinalgError::Singular { condition }) => assert!(condition >= 1e14),
            other => panic!("expected singular error, got {other:?}"),
        }
        let nearly = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15]]);
        assert!(matches!(solve(&nearly, &[1.0, 1.0]), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn condition_estimate_matches_diagonal() {
        let a = Matrix::<f64>::from_diag(&[10.0, 1.0, 0.5]);
        let lu = Lu::factor(&a).unwrap();
        assert!((lu.condition_estimate() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_solve() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        let lu = Lu::factor(&a).unwrap();
        let x = vec![1.0, 2.0, -1.0];
        let b = a.transpose().matvec(&x);
        let got = lu.solve_transpose(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-12);
        }
    }
}
