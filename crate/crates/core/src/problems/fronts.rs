//! Deterministic Pareto-front discretizations.
//!
//! Two-parameter fronts are sampled on a rank-1 lattice
//! `((i + 1/2)/N, frac(1/2 + i/φ))`, which avoids the cell boundaries and so
//! never places a point on the dominated start of a disconnected piece.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::formulas::Benchmark;
use crate::points::ObjectivePointSet;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_8;

fn lattice(i: usize, count: usize) -> (f64, f64) {
    ((i as f64 + 0.5) / count as f64, (0.5 + i as f64 * INV_GOLDEN).fract())
}

/// `count` points on the Pareto front of `kind` (three objectives for DTLZ).
pub(crate) fn sample(kind: Benchmark, count: usize) -> ObjectivePointSet {
    assert!(count >= 2, "front sample needs at least two points");
    let pts: Vec<Vec<f64>> = match kind {
        Benchmark::Zdt1 | Benchmark::Zdt4 => grid(count).map(|s| vec![s * s, 1.0 - s]).collect(),
        Benchmark::Zdt2 => grid(count).map(|s| vec![s, 1.0 - s * s]).collect(),
        Benchmark::Zdt3 => {
            let phi = |t: f64| 1.0 - t.sqrt() - t * (10.0 * PI * t).sin();
            let segments = efficient_intervals(phi, 100_000);
            along_segments(&segments, count).into_iter().map(|t| vec![t, phi(t)]).collect()
        }
        Benchmark::Dtlz1 => (0..count)
            .map(|i| {
                let (u, v) = lattice(i, count);
                let a = u.sqrt();
                let (b1, b2) = (1.0 - a, a * (1.0 - v));
                vec![0.5 * b1, 0.5 * b2, 0.5 * (1.0 - b1 - b2)]
            })
            .collect(),
        Benchmark::Dtlz2 | Benchmark::Dtlz3 | Benchmark::Dtlz4 => (0..count)
            .map(|i| {
                let (u, v) = lattice(i, count);
                let z = u;
                let rho = (1.0 - z * z).sqrt();
                let phi = v * PI / 2.0;
                vec![rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect(),
        Benchmark::Dtlz5 | Benchmark::Dtlz6 => grid(count)
            .map(|t| {
                let a = t * PI / 2.0;
                vec![a.cos() * FRAC_1_SQRT_2, a.cos() * FRAC_1_SQRT_2, a.sin()]
            })
            .collect(),
        Benchmark::Dtlz7 => {
            let phi = |t: f64| t * (1.0 + (3.0 * PI * t).sin());
            let level = |t: f64| -phi(t);
            let e = efficient_intervals(level, 100_000);
            let mut rects = Vec::new();
            for a in &e {
                for b in &e {
                    rects.push((*a, *b));
                }
            }
            let areas: Vec<f64> = rects.iter().map(|(a, b)| (a.1 - a.0) * (b.1 - b.0)).collect();
            let counts = apportion(&areas, count);
            let mut out = Vec::with_capacity(count);
            for ((a, b), c) in rects.iter().zip(counts) {
                for i in 0..c {
                    let (u, v) = lattice(i, c);
                    let f1 = a.0 + (a.1 - a.0) * u;
                    let f2 = b.0 + (b.1 - b.0) * v;
                    out.push(vec![f1, f2, 6.0 - phi(f1) - phi(f2)]);
                }
            }
            out
        }
        Benchmark::ToyBiobj => grid(count)
            .map(|s| {
                let t = 2.0 * s - 1.0;
                vec![2.0 * (t - 1.0).powi(2), 2.0 * (t + 1.0).powi(2)]
            })
            .collect(),
    };
    ObjectivePointSet::from_points(&pts).expect("front sample is finite")
}

fn grid(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |j| j as f64 / (count - 1) as f64)
}

/// Splits `total` across weights by largest remainder.
pub(crate) fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if !(sum > 0.0) {
        return apportion(&vec![1.0; weights.len()], total);
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = exact[i] - exact[i].floor();
        let rj = exact[j] - exact[j].floor();
        rj.partial_cmp(&ri).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
    });
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Midpoint samples along the union of intervals, proportional to length.
fn along_segments(segments: &[(f64, f64)], count: usize) -> Vec<f64> {
    let lengths: Vec<f64> = segments.iter().map(|(a, b)| b - a).collect();
    let counts = apportion(&lengths, count);
    let mut out = Vec::with_capacity(count);
    for (&(a, b), c) in segments.iter().zip(counts) {
        for j in 0..c {
            out.push(a + (b - a) * (j as f64 + 0.5) / c as f64);
        }
    }
    out
}

/// Maximal intervals of `[0, 1]` on which `t -> (t, h(t))` is nondominated,
/// i.e. where `h` lies strictly below its running minimum from the left.
pub(crate) fn efficient_intervals(h: impl Fn(f64) -> f64, resolution: usize) -> Vec<(f64, f64)> {
    let t = |i: usize| i as f64 / resolution as f64;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut best = h(0.0);
    let mut start = Some(0);
    for i in 1..=resolution {
        let v = h(t(i));
        let efficient = v < best;
        best = best.min(v);
        match (efficient, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, resolution));
    }

    let mut out = Vec::with_capacity(runs.len());
    let mut level = f64::INFINITY;
    for (s, e) in runs {
        let a = if s == 0 {
            0.0
        } else {
            // h crosses the previous minimum between t(s-1) and t(s).
            bisect(|x| h(x) - level, t(s - 1), t(s))
        };
        let b = if e == resolution {
            1.0
        } else {
            golden_min(&h, t(e.saturating_sub(1)), t(e + 1))
        };
        level = h(b);
        out.push((a, b));
    }
    out
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) >= 0 > f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = INV_GOLDEN;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::nondominated_indices;

    #[test]
    fn zdt3_has_five_pieces() {
        let phi = |t: f64| 1.0 - t.sqrt() - t * (10.0 * PI * t).sin();
        let segs = efficient_intervals(phi, 100_000);
        assert_eq!(segs.len(), 5);
        assert_eq!(segs[0].0, 0.0);
        assert!((segs[0].1 - 0.0830).abs() < 1e-3);
        assert!((segs[4].1 - 0.8518).abs() < 1e-3);
    }

    #[test]
    fn dtlz7_has_two_pieces() {
        let phi = |t: f64| -(t * (1.0 + (3.0 * PI * t).sin()));
        let segs = efficient_intervals(phi, 100_000);
        assert_eq!(segs.len(), 2);
        assert!((segs[0].1 - 0.2514).abs() < 1e-3);
        assert!((segs[1].0 - 0.6316).abs() < 1e-3);
        assert!((segs[1].1 - 0.8594).abs() < 1e-3);
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(apportion(&[3.0, 1.0], 4), vec![3, 1]);
    }

    #[test]
    fn all_samples_nondominated() {
        for kind in Benchmark::ALL {
            let s = sample(kind, 300);
            assert_eq!(s.len(), 300);
            assert_eq!(nondominated_indices(&s).len(), 300, "{}", kind.name());
        }
    }
}
