//! NSGA-II with simulated binary crossover and polynomial mutation.
//!
//! One `Pcg64` stream drives a run. Draw order: the initial population
//! (point-major, one uniform per coordinate); then per generation, for each
//! mating pair, two binary tournaments (two indices each), the crossover
//! draws, then the mutation draws for both children.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::points::{dominates, ObjectivePointSet, StackedDecision};
use crate::problems::Problem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoeaConfig {
    /// `μ`.
    pub pop_size: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means `1/n`.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    pub seed: u64,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        Self { pop_size: 40, crossover_prob: 0.9, crossover_eta: 15.0, mutation_prob: None, mutation_eta: 20.0, seed: 0 }
    }
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Config("pop_size must be at least 2".into()));
        }
        let probs = [Some(self.crossover_prob), self.mutation_prob];
        if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        if !(self.crossover_eta >= 1.0) || !(self.mutation_eta >= 1.0) {
            return Err(Error::Config("distribution indices must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    /// Zero-based front index.
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub generation: usize,
    pub eval_count: u64,
}

impl Population {
    pub fn decisions(&self) -> StackedDecision {
        let dim = self.individuals.first().map_or(0, |i| i.x.len());
        StackedDecision::new(dim, self.individuals.iter().flat_map(|i| i.x.iter().copied()).collect())
            .expect("consistent decision length")
    }

    pub fn objectives(&self) -> ObjectivePointSet {
        let dim = self.individuals.first().map_or(0, |i| i.f.len());
        ObjectivePointSet::new(dim, self.individuals.iter().flat_map(|i| i.f.iter().copied()).collect())
            .expect("consistent objective length")
    }

    /// One row per individual: `x1..xn, f1..fk, rank, crowding`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Config(format!("writing population CSV: {e}"));
        if let Some(first) = self.individuals.first() {
            let mut header: Vec<String> = (1..=first.x.len()).map(|i| format!("x{i}")).collect();
            header.extend((1..=first.f.len()).map(|i| format!("f{i}")));
            header.extend(["rank".to_string(), "crowding".to_string()]);
            w.write_record(&header).map_err(io)?;
        }
        for ind in &self.individuals {
            let mut row: Vec<String> = ind.x.iter().chain(&ind.f).map(|v| v.to_string()).collect();
            row.push(ind.rank.to_string());
            row.push(ind.crowding.to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(format!("writing population CSV: {e}")))?;
        Ok(())
    }
}

/// Fronts of the Pareto order, best first. Equal points never dominate each
/// other.
pub fn nondominated_sort(objectives: &ObjectivePointSet) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (objectives.point(i), objectives.point(j));
            if dominates(a, b) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(b, a) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance within one front. Extremes of every objective get +∞;
/// an objective with zero range contributes nothing.
pub fn crowding_distance(front: &ObjectivePointSet) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..front.dim() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| front.point(a)[m].total_cmp(&front.point(b)[m]).then(a.cmp(&b)));
        let lo = front.point(order[0])[m];
        let hi = front.point(order[n - 1])[m];
        let range = hi - lo;
        if range == 0.0 {
            continue;
        }
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let gap = front.point(order[w + 1])[m] - front.point(order[w - 1])[m];
            d[order[w]] += gap / range;
        }
    }
    d
}

fn assign_rank_and_crowding(individuals: &mut [Individual]) {
    let objs = objectives_of(individuals);
    for (r, front) in nondominated_sort(&objs).into_iter().enumerate() {
        let cd = crowding_distance(&objs.select(&front));
        for (&i, c) in front.iter().zip(cd) {
            individuals[i].rank = r;
            individuals[i].crowding = c;
        }
    }
}

fn objectives_of(individuals: &[Individual]) -> ObjectivePointSet {
    let dim = individuals[0].f.len();
    ObjectivePointSet::new(dim, individuals.iter().flat_map(|i| i.f.iter().copied()).collect()).expect("objectives")
}

/// The better of `a` and `b` on (rank, crowding), then the lower index.
fn better(pop: &[Individual], a: usize, b: usize) -> usize {
    let (x, y) = (&pop[a], &pop[b]);
    match x.rank.cmp(&y.rank) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => match y.crowding.total_cmp(&x.crowding) {
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal => a.min(b),
        },
    }
}

/// Bounded simulated binary crossover of one variable pair.
fn sbx_pair(rng: &mut Pcg64, x1: f64, x2: f64, lo: f64, hi: f64, eta: f64) -> (f64, f64) {
    let u: f64 = rng.gen();
    if (x1 - x2).abs() <= 1e-14 {
        return (x1, x2);
    }
    let (y1, y2) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
    let spread = |beta: f64| -> f64 {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let beta_lo = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
    let c1 = 0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1));
    let beta_hi = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
    let c2 = 0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1));
    (c1.clamp(lo, hi), c2.clamp(lo, hi))
}

fn polynomial_mutation(rng: &mut Pcg64, y: f64, lo: f64, hi: f64, eta: f64) -> f64 {
    let r: f64 = rng.gen();
    let width = hi - lo;
    if width <= 0.0 {
        return y;
    }
    let (d1, d2) = ((y - lo) / width, (hi - y) / width);
    let pow = 1.0 / (eta + 1.0);
    let dq = if r < 0.5 {
        let v = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
        v.powf(pow) - 1.0
    } else {
        let v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(pow)
    };
    (y + dq * width).clamp(lo, hi)
}

/// Generation-by-generation NSGA-II; cloning it forks the run, RNG included.
#[derive(Clone)]
pub struct Nsga2<'a> {
    problem: &'a dyn Problem,
    cfg: MoeaConfig,
    rng: Pcg64,
    pop: Population,
}

impl<'a> Nsga2<'a> {
    /// Samples and evaluates the initial population.
    pub fn new(problem: &'a dyn Problem, cfg: &MoeaConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = Pcg64::seed_from_u64(cfg.seed);
        let (lo, hi) = (problem.lower(), problem.upper());
        let mut individuals = Vec::with_capacity(cfg.pop_size);
        for _ in 0..cfg.pop_size {
            let x: Vec<f64> = lo.iter().zip(hi).map(|(&l, &h)| l + rng.gen::<f64>() * (h - l)).collect();
            let f = evaluate(problem, &x)?;
            individuals.push(Individual { x, f, rank: 0, crowding: 0.0 });
        }
        assign_rank_and_crowding(&mut individuals);
        let pop = Population { individuals, generation: 0, eval_count: cfg.pop_size as u64 };
        Ok(Self { problem, cfg: cfg.clone(), rng, pop })
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn into_population(self) -> Population {
        self.pop
    }

    /// One generation: `μ` offspring, `(μ + μ)` survival.
    pub fn step(&mut self) -> Result<()> {
        let mu = self.cfg.pop_size;
        let n = self.problem.n_var();
        let (lo, hi) = (self.problem.lower(), self.problem.upper());
        let pm = self.cfg.mutation_prob.unwrap_or(1.0 / n as f64);
        let parents = &self.pop.individuals;
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(mu + 1);
        while children.len() < mu {
            let pick = |rng: &mut Pcg64| {
                let a = rng.gen_range(0..mu);
                let b = rng.gen_range(0..mu);
                better(parents, a, b)
            };
            let p1 = pick(&mut self.rng);
            let p2 = pick(&mut self.rng);
            let mut c1 = parents[p1].x.clone();
            let mut c2 = parents[p2].x.clone();
            if self.rng.gen::<f64>() < self.cfg.crossover_prob {
                for j in 0..n {
                    if self.rng.gen::<f64>() < 0.5 {
                        let (a, b) = sbx_pair(&mut self.rng, c1[j], c2[j], lo[j], hi[j], self.cfg.crossover_eta);
                        if self.rng.gen::<f64>() < 0.5 {
                            (c1[j], c2[j]) = (b, a);
                        } else {
                            (c1[j], c2[j]) = (a, b);
                        }
                    }
                }
            }
            for c in [&mut c1, &mut c2] {
                for j in 0..n {
                    if self.rng.gen::<f64>() < pm {
                        c[j] = polynomial_mutation(&mut self.rng, c[j], lo[j], hi[j], self.cfg.mutation_eta);
                    }
                }
            }
            children.push(c1);
            children.push(c2);
        }
        children.truncate(mu);

        let mut merged = self.pop.individuals.clone();
        for x in children {
            let f = evaluate(self.problem, &x)?;
            merged.push(Individual { x, f, rank: 0, crowding: 0.0 });
        }
        self.pop.eval_count += mu as u64;

        assign_rank_and_crowding(&mut merged);
        let objs = objectives_of(&merged);
        let mut survivors: Vec<usize> = Vec::with_capacity(mu);
        for front in nondominated_sort(&objs) {
            if survivors.len() + front.len() <= mu {
                survivors.extend(front);
            } else {
                let mut rest = front;
                rest.sort_by(|&a, &b| merged[b].crowding.total_cmp(&merged[a].crowding).then(a.cmp(&b)));
                survivors.extend(rest.into_iter().take(mu - survivors.len()));
            }
            if survivors.len() == mu {
                break;
            }
        }
        let mut next: Vec<Individual> = survivors.into_iter().map(|i| merged[i].clone()).collect();
        assign_rank_and_crowding(&mut next);
        self.pop.individuals = next;
        self.pop.generation += 1;
        Ok(())
    }
}

fn evaluate(problem: &dyn Problem, x: &[f64]) -> Result<Vec<f64>> {
    let f = problem.evaluate(x);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("objectives of {} at {x:?}", problem.name())));
    }
    Ok(f)
}

/// `generations` NSGA-II generations from a random initial population.
pub fn nsga2_run(problem: &dyn Problem, cfg: &MoeaConfig, generations: usize) -> Result<Population> {
    if problem.n_var() == 0 {
        return contract("problem has no decision variables");
    }
    let mut run = Nsga2::new(problem, cfg)?;
    for _ in 0..generations {
        run.step()?;
    }
    Ok(run.into_population())
}
