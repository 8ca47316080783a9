//! Reference sets from a warm-start approximation: component detection,
//! filling, k-means reduction and a shift toward the utopian region.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::linalg::{qr, sym_eigen, Matrix};
use crate::points::{distance, squared_distance, ObjectivePointSet};
use crate::problems::fronts::apportion;

/// Auto DBSCAN radius as a multiple of the median nearest-neighbor distance.
pub const AUTO_EPS_FACTOR: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceSetConfig {
    /// Shift magnitude `δ`.
    pub delta: f64,
    /// `μ`.
    pub target_size: usize,
    /// DBSCAN radius; `None` picks it from the data.
    pub dbscan_eps: Option<f64>,
    pub dbscan_min_pts: usize,
    /// The components are filled to `fill_multiplier · μ` points.
    pub fill_multiplier: usize,
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for ReferenceSetConfig {
    fn default() -> Self {
        Self {
            delta: 0.08,
            target_size: 40,
            dbscan_eps: None,
            dbscan_min_pts: 3,
            fill_multiplier: 10,
            kmeans_iters: 50,
            seed: 0,
        }
    }
}

impl ReferenceSetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta must be a nonnegative number, got {}", self.delta)));
        }
        if self.target_size < 2 {
            return Err(Error::Config("target_size must be at least 2".into()));
        }
        if let Some(eps) = self.dbscan_eps {
            if !(eps > 0.0) {
                return Err(Error::Config(format!("dbscan_eps must be positive, got {eps}")));
            }
        }
        if self.dbscan_min_pts == 0 || self.fill_multiplier == 0 {
            return Err(Error::Config("dbscan_min_pts and fill_multiplier must be positive".into()));
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Radius used when `dbscan_eps` is not given. Duplicates are ignored so a
/// doubled sample does not collapse the radius to zero.
pub fn auto_eps(y: &ObjectivePointSet) -> f64 {
    let nn: Vec<f64> = (0..y.len())
        .filter_map(|i| {
            (0..y.len())
                .filter(|&j| j != i)
                .map(|j| distance(y.point(i), y.point(j)))
                .filter(|&d| d > 0.0)
                .min_by(f64::total_cmp)
        })
        .collect();
    if nn.is_empty() {
        0.0
    } else {
        AUTO_EPS_FACTOR * median(nn)
    }
}

/// DBSCAN clusters of `y`, each a sorted index list, ordered by smallest
/// member. Noise points join the cluster of their nearest clustered point.
pub fn detect_components(y: &ObjectivePointSet, cfg: &ReferenceSetConfig) -> Result<Vec<Vec<usize>>> {
    let n = y.len();
    if n < cfg.dbscan_min_pts || n == 0 {
        return contract(format!("component detection needs at least {} points, got {n}", cfg.dbscan_min_pts));
    }
    let eps = cfg.dbscan_eps.unwrap_or_else(|| auto_eps(y));
    if eps == 0.0 {
        return Ok(vec![(0..n).collect()]);
    }
    let neighbors: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| distance(y.point(i), y.point(j)) <= eps).collect()).collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= cfg.dbscan_min_pts).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters = 0;
    for seed in 0..n {
        if label[seed].is_some() || !core[seed] {
            continue;
        }
        label[seed] = Some(clusters);
        let mut stack = vec![seed];
        while let Some(p) = stack.pop() {
            if !core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if label[q].is_none() {
                    label[q] = Some(clusters);
                    stack.push(q);
                }
            }
        }
        clusters += 1;
    }
    if clusters == 0 {
        return Ok(vec![(0..n).collect()]);
    }

    let assigned: Vec<usize> = (0..n).filter(|&i| label[i].is_some()).collect();
    let mut out = vec![Vec::new(); clusters];
    for i in 0..n {
        let c = label[i].unwrap_or_else(|| {
            let nearest = assigned
                .iter()
                .copied()
                .min_by(|&a, &b| squared_distance(y.point(i), y.point(a)).total_cmp(&squared_distance(y.point(i), y.point(b))))
                .expect("at least one cluster");
            label[nearest].expect("assigned")
        });
        out[c].push(i);
    }
    out.sort_by_key(|c| c[0]);
    Ok(out)
}

/// `count` points equally spaced by arc length along the chain through
/// `points` sorted by the first objective, from the first point to the last.
fn fill_chain(points: &ObjectivePointSet, count: usize) -> ObjectivePointSet {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]).then(a.cmp(&b)));
    let chain = points.select(&order);
    let mut cumulative = vec![0.0];
    for i in 1..chain.len() {
        let last = cumulative[i - 1];
        cumulative.push(last + distance(chain.point(i - 1), chain.point(i)));
    }
    let total = *cumulative.last().expect("nonempty");
    let mut out = ObjectivePointSet::empty(points.dim());
    let mut seg = 0;
    for j in 0..count {
        let s = if count == 1 { 0.0 } else { total * j as f64 / (count - 1) as f64 };
        if total == 0.0 {
            out.push(chain.point(0));
            continue;
        }
        while seg + 2 < chain.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        if chain.len() == 1 {
            out.push(chain.point(0));
            continue;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 { ((s - cumulative[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        let p: Vec<f64> = chain.point(seg).iter().zip(chain.point(seg + 1)).map(|(a, b)| a + t * (b - a)).collect();
        out.push(&p);
    }
    out
}

struct Triangulated {
    /// Vertex index triples.
    triangles: Vec<[usize; 3]>,
    /// Triangle areas in the original space.
    areas: Vec<f64>,
}

/// Delaunay triangulation of `points` projected onto their two leading
/// principal directions; `None` when the projection is degenerate.
fn triangulate(points: &ObjectivePointSet) -> Option<Triangulated> {
    let (n, k) = (points.len(), points.dim());
    if n < 3 || k < 3 {
        return None;
    }
    let c = points.centroid();
    let mut cov = Matrix::<f64>::zeros(k, k);
    for p in points.iter() {
        for a in 0..k {
            for b in 0..k {
                cov[(a, b)] += (p[a] - c[a]) * (p[b] - c[b]);
            }
        }
    }
    let eig = sym_eigen(&cov).ok()?;
    let axes = [eig.eigenvectors.column(k - 1), eig.eigenvectors.column(k - 2)];
    let projected: Vec<delaunator::Point> = points
        .iter()
        .map(|p| {
            let d: Vec<f64> = p.iter().zip(&c).map(|(a, b)| a - b).collect();
            delaunator::Point { x: crate::linalg::dot(&d, &axes[0]), y: crate::linalg::dot(&d, &axes[1]) }
        })
        .collect();
    let tri = delaunator::triangulate(&projected);
    if tri.triangles.is_empty() {
        return None;
    }
    let triangles: Vec<[usize; 3]> = tri.triangles.chunks_exact(3).map(|t| [t[0], t[1], t[2]]).collect();
    let areas: Vec<f64> = triangles
        .iter()
        .map(|t| triangle_area(points.point(t[0]), points.point(t[1]), points.point(t[2])))
        .collect();
    if !(areas.iter().sum::<f64>() > 0.0) {
        return None;
    }
    Some(Triangulated { triangles, areas })
}

/// Area of a triangle embedded in any dimension.
fn triangle_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let u: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let v: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let uu = crate::linalg::dot(&u, &u);
    let vv = crate::linalg::dot(&v, &v);
    let uv = crate::linalg::dot(&u, &v);
    0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
}

fn fill_triangles(points: &ObjectivePointSet, tri: &Triangulated, count: usize, rng: &mut Pcg64) -> ObjectivePointSet {
    let mut out = ObjectivePointSet::empty(points.dim());
    for (t, c) in tri.triangles.iter().zip(apportion(&tri.areas, count)) {
        let (a, b, v) = (points.point(t[0]), points.point(t[1]), points.point(t[2]));
        for _ in 0..c {
            let r1: f64 = rng.gen::<f64>().sqrt();
            let r2: f64 = rng.gen();
            let (wa, wb, wc) = (1.0 - r1, r1 * (1.0 - r2), r1 * r2);
            let p: Vec<f64> = (0..points.dim()).map(|j| wa * a[j] + wb * b[j] + wc * v[j]).collect();
            out.push(&p);
        }
    }
    out
}

/// Fills one component with `count` points.
///
/// Two objectives: equal arc-length spacing along the chain of points sorted
/// by `f₁`. Three or more: area-proportional uniform samples over a Delaunay
/// triangulation of the points, falling back to the chain when the points
/// are (nearly) collinear.
pub fn fill_component(points: &ObjectivePointSet, count: usize, seed: u64) -> Result<ObjectivePointSet> {
    if points.is_empty() {
        return contract("cannot fill an empty component");
    }
    if points.dim() >= 3 {
        if let Some(tri) = triangulate(points) {
            let mut rng = Pcg64::seed_from_u64(seed);
            return Ok(fill_triangles(points, &tri, count, &mut rng));
        }
    }
    Ok(fill_chain(points, count))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub centroids: ObjectivePointSet,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub inertia: Vec<f64>,
    /// Fewer distinct points than clusters: the centroids are the distinct
    /// points, padded with repeats.
    pub padded: bool,
}

fn nearest(p: &[f64], centroids: &ObjectivePointSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn distinct_indices(points: &ObjectivePointSet) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        if !out.iter().any(|&j| points.point(j) == points.point(i)) {
            out.push(i);
        }
    }
    out
}

/// k-means++ seeding followed by at most `iters` Lloyd iterations.
pub fn reduce_kmeans(points: &ObjectivePointSet, mu: usize, iters: usize, seed: u64) -> Result<KMeans> {
    if mu == 0 || points.len() < mu {
        return contract(format!("k-means needs at least {mu} points, got {}", points.len()));
    }
    let distinct = distinct_indices(points);
    if distinct.len() <= mu {
        let mut centroids = points.select(&distinct);
        let padded = distinct.len() < mu;
        for i in 0..mu - distinct.len() {
            let p = centroids.point(i % distinct.len()).to_vec();
            centroids.push(&p);
        }
        return Ok(KMeans { centroids, inertia: vec![0.0], padded });
    }

    let mut rng = Pcg64::seed_from_u64(seed);
    let mut centroids = ObjectivePointSet::empty(points.dim());
    centroids.push(points.point(rng.gen_range(0..points.len())));
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, centroids.point(0))).collect();
    while centroids.len() < mu {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("more distinct points than centroids");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        centroids.push(points.point(pick));
        let c = centroids.len() - 1;
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, centroids.point(c)));
        }
    }

    let dim = points.dim();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut inertia = Vec::new();
    for _ in 0..iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (j, _) = nearest(p, &centroids);
            changed |= assignment[i] != j;
            assignment[i] = j;
        }
        let mut sums = vec![0.0; mu * dim];
        let mut counts = vec![0usize; mu];
        for (p, &j) in points.iter().zip(&assignment) {
            counts[j] += 1;
            for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..mu {
            if counts[j] > 0 {
                for (c, s) in centroids.point_mut(j).iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
        inertia.push(points.iter().zip(&assignment).map(|(p, &j)| squared_distance(p, centroids.point(j))).sum());
        if !changed {
            break;
        }
    }
    Ok(KMeans { centroids, inertia, padded: false })
}

/// Per-objective minimizers. Ties on `f_i` are broken by `f_{i+1}`, then
/// `f_{i+2}` and so on cyclically, then by the lower index, so the corners of
/// a simplex come out distinct.
pub fn extreme_points(y: &ObjectivePointSet) -> Vec<Vec<f64>> {
    let k = y.dim();
    (0..k)
        .map(|i| {
            let best = (0..y.len())
                .min_by(|&a, &b| {
                    let (pa, pb) = (y.point(a), y.point(b));
                    (0..k)
                        .map(|s| (i + s) % k)
                        .map(|j| pa[j].total_cmp(&pb[j]))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                })
                .expect("nonempty set");
            y.point(best).to_vec()
        })
        .collect()
}

/// Unit normal of the hyperplane through the extreme points, oriented so its
/// first component is negative.
pub fn shift_direction(y: &ObjectivePointSet) -> Result<Vec<f64>> {
    let k = y.dim();
    if y.is_empty() || k < 2 {
        return contract("shift direction needs a nonempty set with at least two objectives");
    }
    let m = extreme_points(y);
    let cols = Matrix::from_fn(k, k - 1, |r, c| m[c + 1][r] - m[0][r]);
    let scale = cols.max_abs();
    let f = qr(&cols);
    let rank_tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    if scale == 0.0 || (0..k - 1).any(|j| f.r[(j, j)].abs() <= rank_tol) {
        return Err(Error::DegenerateGeometry("extreme points are affinely dependent".into()));
    }
    let q = f.q.column(k - 1);
    let norm = crate::linalg::norm2(&q);
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    Ok(q.iter().map(|v| -sign * v / norm).collect())
}

/// Shift used when the extremes are degenerate: toward the ideal point.
pub fn fallback_direction(k: usize) -> Vec<f64> {
    vec![-1.0 / (k as f64).sqrt(); k]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet {
    pub points: ObjectivePointSet,
    pub eta: Vec<f64>,
    /// The extremes were degenerate and `eta` is the fallback direction.
    pub fallback_shift: bool,
    /// k-means had fewer distinct points than `μ`.
    pub padded: bool,
    pub components: usize,
    /// Size of the filled set before reduction.
    pub filled: usize,
}

/// Component-wise fill of `y0`, reduction to `μ` points and the shift
/// `r = y + δη`.
pub fn generate_reference_set(y0: &ObjectivePointSet, cfg: &ReferenceSetConfig) -> Result<ReferenceSet> {
    cfg.validate()?;
    if y0.len() < 2 {
        return contract("reference-set generation needs at least two points");
    }
    let comps = if y0.len() >= cfg.dbscan_min_pts { detect_components(y0, cfg)? } else { vec![(0..y0.len()).collect()] };
    let total = cfg.fill_multiplier * cfg.target_size;
    let sets: Vec<ObjectivePointSet> = comps.iter().map(|c| y0.select(c)).collect();
    let tris: Vec<Option<Triangulated>> =
        sets.iter().map(|s| if y0.dim() >= 3 { triangulate(s) } else { None }).collect();
    let weights: Vec<f64> = if y0.dim() >= 3 && tris.iter().any(Option::is_some) {
        tris.iter().map(|t| t.as_ref().map_or(0.0, |t| t.areas.iter().sum())).collect()
    } else {
        comps.iter().map(|c| c.len() as f64).collect()
    };
    let counts = apportion(&weights, total);

    let mut filled = ObjectivePointSet::empty(y0.dim());
    for (i, ((set, tri), count)) in sets.iter().zip(&tris).zip(counts).enumerate() {
        if count == 0 {
            continue;
        }
        let part = match tri {
            Some(t) => {
                let mut rng = Pcg64::seed_from_u64(cfg.seed.wrapping_add(i as u64 + 1));
                fill_triangles(set, t, count, &mut rng)
            }
            None => fill_chain(set, count),
        };
        for p in part.iter() {
            filled.push(p);
        }
    }
    let km = reduce_kmeans(&filled, cfg.target_size, cfg.kmeans_iters, cfg.seed)?;
    let (eta, fallback_shift) = match shift_direction(y0) {
        Ok(eta) => (eta, false),
        Err(Error::DegenerateGeometry(_)) => (fallback_direction(y0.dim()), true),
        Err(e) => return Err(e),
    };
    let mut points = km.centroids;
    for i in 0..points.len() {
        for (v, e) in points.point_mut(i).iter_mut().zip(&eta) {
            *v += cfg.delta * e;
        }
    }
    Ok(ReferenceSet { points, eta, fallback_shift, padded: km.padded, components: comps.len(), filled: filled.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[[f64; 2]]) -> ObjectivePointSet {
        ObjectivePointSet::from_points(&v.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn chain_fill_of_a_segment() {
        let out = fill_component(&set(&[[1.0, 1.0], [0.0, 0.0]]), 3, 0).unwrap();
        assert_eq!(out.to_vecs(), vec![vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]]);
    }

    #[test]
    fn identical_points_form_one_component() {
        let y = set(&[[1.0, 2.0]; 5]);
        assert_eq!(detect_components(&y, &ReferenceSetConfig::default()).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn degenerate_extremes() {
        let y = set(&[[0.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(shift_direction(&y), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn padded_when_too_few_distinct_points() {
        let y = set(&[[0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]]);
        let km = reduce_kmeans(&y, 3, 10, 0).unwrap();
        assert!(km.padded);
        assert_eq!(km.centroids.len(), 3);
    }
}
