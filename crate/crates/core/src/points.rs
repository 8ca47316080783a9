//! Point sets in decision and objective space, and the Pareto order.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::Scalar;

/// An ordered set of `len` points of common dimension `dim`, stored flat.
///
/// In decision space this is the stacked vector `X` of `mu` points in
/// `R^n` (point `i` occupies `[i*n, (i+1)*n)`); in objective space it is an
/// approximation set `Y` or a reference set `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet<T> {
    dim: usize,
    data: Vec<T>,
}

/// `mu` decision vectors flattened into `R^{mu n}`.
pub type StackedDecision<T = f64> = PointSet<T>;
/// Points in objective space `R^k`.
pub type ObjectivePointSet<T = f64> = PointSet<T>;

impl<T: Scalar> PointSet<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return contract("point dimension must be positive");
        }
        if data.len() % dim != 0 {
            return contract(format!("data length {} is not a multiple of dimension {dim}", data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return contract("point set contains non-finite values");
        }
        Ok(Self { dim, data })
    }

    pub fn from_points(points: &[Vec<T>]) -> Result<Self> {
        let Some(first) = points.first() else {
            return contract("cannot build a point set from zero points without a dimension");
        };
        let dim = first.len();
        if points.iter().any(|p| p.len() != dim) {
            return contract("points have inconsistent dimensions");
        }
        Self::new(dim, points.concat())
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn point_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<T> {
        self.data
    }

    pub fn push(&mut self, p: &[T]) {
        assert_eq!(p.len(), self.dim, "point dimension");
        self.data.extend_from_slice(p);
    }

    pub fn to_vecs(&self) -> Vec<Vec<T>> {
        self.iter().map(<[T]>::to_vec).collect()
    }

    /// Subset by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, data }
    }

    pub fn centroid(&self) -> Vec<T> {
        let mut c = vec![T::zero(); self.dim];
        for p in self.iter() {
            for (ci, &pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        let n = T::from_count(self.len().max(1));
        c.iter_mut().for_each(|ci| *ci /= n);
        c
    }

    /// Largest pairwise Euclidean distance.
    pub fn spread(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(distance(self.point(i), self.point(j)));
            }
        }
        best
    }
}

pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Pareto order: `a` dominates `b` iff `a <= b` componentwise and `a != b`.
pub fn dominates<T: Scalar>(a: &[T], b: &[T]) -> bool {
    let mut strictly = false;
    for (&x, &y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the points not dominated by any other point of the set.
pub fn nondominated_indices<T: Scalar>(set: &PointSet<T>) -> Vec<usize> {
    (0..set.len())
        .filter(|&i| !(0..set.len()).any(|j| j != i && dominates(set.point(j), set.point(i))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_requires_strict_component() {
        assert!(dominates(&[0.0, 1.0], &[1.0, 1.0]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        assert!(!dominates(&[0.0, 2.0], &[1.0, 1.0]));
    }

    #[test]
    fn construction_checks() {
        assert!(PointSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointSet::new(2, vec![1.0, f64::NAN]).is_err());
        let s = PointSet::from_points(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(nondominated_indices(&s), vec![0, 1]);
        assert!((s.spread() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.centroid(), vec![2.0 / 3.0, 2.0 / 3.0]);
    }
}
