use super::Matrix;
use crate::Scalar;

/// Full QR factorization `M = Q R` with `Q` square orthogonal.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

/// Householder QR of an `m x n` matrix.
///
/// Rank deficiency is allowed; the corresponding diagonal entries of `R`
/// come out as zero. When `M` has full column rank and `n = m - 1`, the last
/// column of `Q` spans the orthogonal complement of `range(M)`.
pub fn qr<T: Scalar>(m: &Matrix<T>) -> Qr<T> {
    let rows = m.rows();
    let cols = m.cols();
    let mut r = m.clone();
    let mut reflectors: Vec<(usize, Vec<T>)> = Vec::new();

    for k in 0..cols.min(rows.saturating_sub(1)) {
        let x: Vec<T> = (k..rows).map(|i| r[(i, k)]).collect();
        let alpha = super::norm2(&x);
        if alpha == T::zero() {
            continue;
        }
        let sign = if x[0] >= T::zero() { T::one() } else { -T::one() };
        let mut v = x;
        v[0] += sign * alpha;
        let vnorm = super::norm2(&v);
        if vnorm == T::zero() {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vnorm;
        }
        // R <- (I - 2 v v^T) R on rows k..
        for j in k..cols {
            let s: T = (k..rows).map(|i| v[i - k] * r[(i, j)]).sum();
            let s2 = s + s;
            for i in k..rows {
                r[(i, j)] -= s2 * v[i - k];
            }
        }
        for i in k + 1..rows {
            r[(i, k)] = T::zero();
        }
        reflectors.push((k, v));
    }

    // Q = H_0 H_1 ... H_{p-1}, accumulated right to left on the identity.
    let mut q = Matrix::identity(rows);
    for (k, v) in reflectors.iter().rev() {
        for j in 0..rows {
            let s: T = (*k..rows).map(|i| v[i - k] * q[(i, j)]).sum();
            let s2 = s + s;
            for i in *k..rows {
                q[(i, j)] -= s2 * v[i - k];
            }
        }
    }
    Qr { q, r }
}
