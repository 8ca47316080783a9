//! The hybrid driver: NSGA-II warm start, reference set, kernel choice and
//! a short MMD-Newton phase, plus the budget-matched NSGA-II baseline and
//! the record statistics.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::linalg::condition_number;
use crate::metrics::{delta_p, equivalent_evals, reference_front, BudgetLedger};
use crate::mmd::{mmd_hess_objective, mmd_sq};
use crate::moea::{MoeaConfig, Nsga2, Population};
use crate::newton::{mmdn_run_with, precondition, PRECONDITION_BETA, ConstraintMode, IterationRecord, NewtonConfig, StopReason};
use crate::points::{nondominated_indices, ObjectivePointSet};
use crate::problems::{make_problem, Problem, ProblemDef};
use crate::refset::{generate_reference_set, ReferenceSetConfig};

/// Length-scales tried by the automatic kernel choice.
pub const THETA_GRID: [f64; 8] = [1e-2, 1e-1, 1.0, 10.0, 100.0, 500.0, 1000.0, 5000.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Hybrid,
    MoeaAlone,
    MmdnOnly,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Hybrid => "hybrid",
            Mode::MoeaAlone => "moea-alone",
            Mode::MmdnOnly => "mmdn-only",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Mode::Hybrid),
            "moea-alone" | "moea" => Ok(Mode::MoeaAlone),
            "mmdn-only" | "mmdn" => Ok(Mode::MmdnOnly),
            _ => Err(Error::Config(format!("unknown mode {s:?} (hybrid, moea-alone, mmdn-only)"))),
        }
    }
}

/// `μ` when the configuration leaves it open.
pub fn default_mu(n_obj: usize) -> usize {
    if n_obj <= 2 {
        40
    } else {
        91
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    /// Decision dimension; the benchmark default when absent.
    pub n_var: Option<usize>,
    pub mode: Mode,
    /// Population and reference-set size; 40 or 91 by objective count when absent.
    pub mu: Option<usize>,
    /// NSGA-II generations `N₁`.
    pub n1: usize,
    /// Newton iterations `N₂`.
    pub n2: usize,
    pub eps: f64,
    /// `auto`, `paper-table-3`, or a family name used with `theta`.
    pub kernel: String,
    pub theta: Option<f64>,
    pub constraint_mode: ConstraintMode,
    pub active_tol: f64,
    /// Also run NSGA-II alone at the hybrid's equivalent budget.
    pub match_budget: bool,
    pub refset: ReferenceSetConfig,
    pub moea: MoeaConfig,
    pub seeds: Vec<u64>,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "zdt1".into(),
            n_var: None,
            mode: Mode::Hybrid,
            mu: None,
            n1: 300,
            n2: 5,
            eps: 1e-6,
            kernel: "auto".into(),
            theta: None,
            constraint_mode: ConstraintMode::ActiveSet,
            active_tol: 1e-6,
            match_budget: true,
            refset: ReferenceSetConfig::default(),
            moea: MoeaConfig::default(),
            seeds: vec![0],
            out: None,
        }
    }
}

/// How the kernel is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelChoice {
    Auto,
    PaperTable3,
    Fixed(KernelSpec),
}

impl RunConfig {
    pub fn kernel_choice(&self) -> Result<KernelChoice> {
        match (self.kernel.as_str(), self.theta) {
            ("auto", None) => Ok(KernelChoice::Auto),
            ("paper-table-3", None) => Ok(KernelChoice::PaperTable3),
            ("auto" | "paper-table-3", Some(_)) => {
                Err(Error::Config(format!("theta cannot be combined with kernel {:?}", self.kernel)))
            }
            (family, Some(theta)) => Ok(KernelChoice::Fixed(KernelSpec::new(family.parse()?, theta)?)),
            (family, None) => Err(Error::Config(format!("kernel {family:?} needs a theta"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.mu {
            if mu < 2 {
                return Err(Error::Config("mu must be at least 2".into()));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("eps must be positive".into()));
        }
        if !(self.active_tol > 0.0) {
            return Err(Error::Config("active_tol must be positive".into()));
        }
        self.kernel_choice()?;
        self.moea.validate()?;
        let refset = ReferenceSetConfig { target_size: self.mu.unwrap_or(2).max(2), ..self.refset.clone() };
        refset.validate()
    }

    pub fn make_problem(&self) -> Result<ProblemDef> {
        make_problem(&self.problem, self.n_var)
    }

    /// 64-bit FNV-1a of the canonical JSON form, with `seeds` and `out`
    /// cleared so every seed of a batch shares the hash.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { seeds: Vec::new(), out: None, ..self.clone() };
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Kernels used for the NSGA-II rows of the published comparison.
pub fn table3_kernel(problem: &str) -> Option<KernelSpec> {
    match problem {
        "zdt1" | "zdt2" | "zdt3" => KernelSpec::gaussian(2000.0).ok(),
        "zdt4" => KernelSpec::laplace(1.0).ok(),
        p if p.starts_with("dtlz") => KernelSpec::laplace(500.0).ok(),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCandidate {
    pub kernel: KernelSpec,
    /// Every Hessian entry is below the preconditioning floor, so `H + τI`
    /// would be conditioned by the floor alone; such candidates are skipped.
    pub negligible: bool,
    pub tau: Option<f64>,
    /// Condition number of `H + τI`; `None` when preconditioning failed.
    pub condition: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSelection {
    pub kernel: KernelSpec,
    pub condition: f64,
    pub tau: f64,
    pub candidates: Vec<KernelCandidate>,
}

/// Grid search over {Gaussian, Laplace} × [`THETA_GRID`] for the smallest
/// condition number of the preconditioned objective-space MMD² Hessian.
/// Ties keep the earlier candidate: Gaussian first, then smaller `θ`.
/// Candidates whose Hessian vanishes to within `β` are not eligible.
pub fn select_kernel(y0: &ObjectivePointSet, r0: &ObjectivePointSet) -> Result<KernelSelection> {
    let mut candidates = Vec::with_capacity(2 * THETA_GRID.len());
    let mut best: Option<(KernelSpec, f64, f64)> = None;
    for family in [KernelFamily::Gaussian, KernelFamily::Laplace] {
        for theta in THETA_GRID {
            let kernel = KernelSpec::new(family, theta)?;
            let h = mmd_hess_objective(y0, r0, &kernel)?;
            let negligible = h.max_abs() <= PRECONDITION_BETA;
            let scored = if negligible { None } else { precondition(&h).ok() }.and_then(|pre| {
                let mut shifted = h.clone();
                shifted.add_to_diagonal(pre.tau);
                condition_number(&shifted).ok().filter(|c| c.is_finite()).map(|c| (pre.tau, c))
            });
            if let Some((tau, c)) = scored {
                if best.map_or(true, |(_, bc, _)| c < bc) {
                    best = Some((kernel, c, tau));
                }
            }
            candidates.push(KernelCandidate { kernel, negligible, tau: scored.map(|s| s.0), condition: scored.map(|s| s.1) });
        }
    }
    let (kernel, condition, tau) =
        best.ok_or_else(|| Error::Config("every kernel candidate failed preconditioning".into()))?;
    Ok(KernelSelection { kernel, condition, tau, candidates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub moea: BudgetLedger,
    pub newton: BudgetLedger,
    /// Equivalent evaluations of both phases.
    pub equivalent_evals: f64,
}

impl Budget {
    fn new(moea: BudgetLedger, newton: BudgetLedger) -> Self {
        let equivalent_evals = equivalent_evals(&moea.plus(&newton));
        Self { moea, newton, equivalent_evals }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    /// NSGA-II generations beyond `N₁`.
    pub extra_generations: usize,
    pub eval_count: u64,
    pub final_d2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub problem: String,
    pub mode: Mode,
    pub seed: u64,
    pub mu: usize,
    pub n1: usize,
    pub n2: usize,
    pub kernel: Option<KernelSpec>,
    pub budget: Budget,
    /// `Δ₂` of the final nondominated points against the discretized front.
    pub final_d2: f64,
    pub initial_mmd: Option<f64>,
    pub final_mmd: Option<f64>,
    pub trace: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
    pub baseline: Option<BaselineSummary>,
    pub warnings: Vec<String>,
    pub failed: Option<String>,
    pub wall_time_s: f64,
    /// Final objective vectors, point-major.
    pub final_objectives: Vec<Vec<f64>>,
}

fn final_d2(y: &ObjectivePointSet, front: &ObjectivePointSet) -> Result<f64> {
    let nd = nondominated_indices(y);
    delta_p(&y.select(&nd), front, 2.0)
}

struct Setup {
    problem: ProblemDef,
    mu: usize,
    moea: MoeaConfig,
}

fn setup(cfg: &RunConfig, seed: u64) -> Result<Setup> {
    cfg.validate()?;
    let problem = cfg.make_problem()?;
    let mu = cfg.mu.unwrap_or_else(|| default_mu(problem.n_obj()));
    let moea = MoeaConfig { pop_size: mu, seed, ..cfg.moea.clone() };
    Ok(Setup { problem, mu, moea })
}

fn moea_phase<'a>(problem: &'a dyn Problem, moea: &MoeaConfig, generations: usize) -> Result<Nsga2<'a>> {
    let mut run = Nsga2::new(problem, moea)?;
    for _ in 0..generations {
        run.step()?;
    }
    Ok(run)
}

/// Runs one seed of `cfg` in its configured mode. Configuration errors are
/// returned; failures inside a phase give a record with `failed` set.
pub fn run_hybrid(cfg: &RunConfig, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let s = setup(cfg, seed)?;
    let problem: &dyn Problem = &s.problem;
    let front = reference_front(problem)?;
    let generations = if cfg.mode == Mode::MmdnOnly { 0 } else { cfg.n1 };
    let moea = moea_phase(problem, &s.moea, generations)?;
    let pop: &Population = moea.population();
    let moea_ledger = BudgetLedger::new(pop.eval_count, 0, 0);
    let y0 = pop.objectives();

    let mut record = RunRecord {
        config_hash: cfg.hash(),
        problem: problem.name().to_string(),
        mode: cfg.mode,
        seed,
        mu: s.mu,
        n1: generations,
        n2: if cfg.mode == Mode::MoeaAlone { 0 } else { cfg.n2 },
        kernel: None,
        budget: Budget::new(moea_ledger, BudgetLedger::default()),
        final_d2: final_d2(&y0, &front)?,
        initial_mmd: None,
        final_mmd: None,
        trace: Vec::new(),
        stop: None,
        baseline: None,
        warnings: Vec::new(),
        failed: None,
        wall_time_s: 0.0,
        final_objectives: y0.to_vecs(),
    };

    if cfg.mode != Mode::MoeaAlone && cfg.n2 > 0 {
        if let Err(e) = newton_phase(cfg, &s, &moea, &front, &mut record) {
            record.failed = Some(e.to_string());
        }
    }
    if cfg.mode == Mode::Hybrid && cfg.match_budget && record.failed.is_none() {
        let baseline = run_baseline_matched(cfg, seed, &record)?;
        record.baseline = Some(BaselineSummary {
            extra_generations: baseline.n1 - record.n1,
            eval_count: baseline.budget.moea.plain_evals,
            final_d2: baseline.final_d2,
        });
    }
    record.wall_time_s = start.elapsed().as_secs_f64();
    Ok(record)
}

fn newton_phase(cfg: &RunConfig, s: &Setup, moea: &Nsga2, front: &ObjectivePointSet, record: &mut RunRecord) -> Result<()> {
    let problem: &dyn Problem = &s.problem;
    let pop = moea.population();
    let x0 = pop.decisions();
    let y0 = pop.objectives();
    let nd = nondominated_indices(&y0);
    let source = if nd.len() >= 2 { y0.select(&nd) } else { y0.clone() };
    let refset_cfg = ReferenceSetConfig { target_size: s.mu, seed: s.moea.seed, ..cfg.refset.clone() };
    let rs = generate_reference_set(&source, &refset_cfg)?;
    if rs.fallback_shift {
        record.warnings.push("extreme points are degenerate; shifted along -(1,...,1)/sqrt(k)".into());
    }
    if rs.padded {
        record.warnings.push("fewer distinct filled points than mu; reference set padded".into());
    }
    let kernel = match cfg.kernel_choice()? {
        KernelChoice::Fixed(k) => k,
        KernelChoice::PaperTable3 => table3_kernel(problem.name())
            .ok_or_else(|| Error::Config(format!("no preset kernel for {}", problem.name())))?,
        KernelChoice::Auto => select_kernel(&y0, &rs.points)?.kernel,
    };
    record.kernel = Some(kernel);
    record.initial_mmd = Some(mmd_sq(&y0, &rs.points, &kernel)?);

    let newton_cfg = NewtonConfig { max_iter: cfg.n2, eps: cfg.eps, active_tol: cfg.active_tol, mode: cfg.constraint_mode };
    let run = mmdn_run_with(&x0, problem, &rs.points, &kernel, &newton_cfg)?;
    record.budget = Budget::new(record.budget.moea, BudgetLedger::from_calls(run.calls));
    record.final_mmd = Some(run.mmd);
    record.final_d2 = final_d2(&run.y, front)?;
    record.final_objectives = run.y.to_vecs();
    record.trace = run.trace;
    record.stop = Some(run.stop);
    Ok(())
}

/// NSGA-II generations beyond `N₁` needed to spend at least `extra`
/// equivalent evaluations with population `mu`.
pub fn matched_generations(extra: f64, mu: usize) -> usize {
    if extra <= 0.0 {
        0
    } else {
        (extra / mu as f64).ceil() as usize
    }
}

/// NSGA-II alone, continued past `N₁` until its evaluation count reaches the
/// hybrid's equivalent budget.
pub fn run_baseline_matched(cfg: &RunConfig, seed: u64, hybrid: &RunRecord) -> Result<RunRecord> {
    let start = Instant::now();
    let s = setup(cfg, seed)?;
    let problem: &dyn Problem = &s.problem;
    let front = reference_front(problem)?;
    let extra = matched_generations(equivalent_evals(&hybrid.budget.newton), s.mu);
    let generations = hybrid.n1 + extra;
    let moea = moea_phase(problem, &s.moea, generations)?;
    let pop = moea.population();
    let y = pop.objectives();
    Ok(RunRecord {
        config_hash: cfg.hash(),
        problem: problem.name().to_string(),
        mode: Mode::MoeaAlone,
        seed,
        mu: s.mu,
        n1: generations,
        n2: 0,
        kernel: None,
        budget: Budget::new(BudgetLedger::new(pop.eval_count, 0, 0), BudgetLedger::default()),
        final_d2: final_d2(&y, &front)?,
        initial_mmd: None,
        final_mmd: None,
        trace: Vec::new(),
        stop: None,
        baseline: None,
        warnings: Vec::new(),
        failed: None,
        wall_time_s: start.elapsed().as_secs_f64(),
        final_objectives: y.to_vecs(),
    })
}

/// Linear-interpolation quantile: position `q (n − 1)` in the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub mode: String,
    pub seed_count: usize,
    pub median_d2: f64,
    pub q10_d2: f64,
    pub q90_d2: f64,
    pub median_budget: f64,
}

/// Median and 10 %/90 % quantiles of `Δ₂` per (problem, mode) in order of
/// first appearance. Budget-matched baselines embedded in hybrid records get
/// their own `moea-alone-matched` rows. Failed records are skipped.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<((String, String), Vec<(f64, f64)>)> = Vec::new();
    let mut add = |problem: &str, mode: &str, d2: f64, budget: f64| {
        let key = (problem.to_string(), mode.to_string());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push((d2, budget)),
            None => groups.push((key, vec![(d2, budget)])),
        }
    };
    for r in records.iter().filter(|r| r.failed.is_none()) {
        add(&r.problem, r.mode.name(), r.final_d2, r.budget.equivalent_evals);
        if let Some(b) = &r.baseline {
            add(&r.problem, "moea-alone-matched", b.final_d2, b.eval_count as f64);
        }
    }
    groups
        .into_iter()
        .map(|((problem, mode), v)| {
            let d2: Vec<f64> = v.iter().map(|p| p.0).collect();
            let budget: Vec<f64> = v.iter().map(|p| p.1).collect();
            SummaryRow {
                problem,
                mode,
                seed_count: v.len(),
                median_d2: quantile(&d2, 0.5).expect("nonempty"),
                q10_d2: quantile(&d2, 0.1).expect("nonempty"),
                q90_d2: quantile(&d2, 0.9).expect("nonempty"),
                median_budget: quantile(&budget, 0.5).expect("nonempty"),
            }
        })
        .collect()
}

/// Per problem: does the hybrid's median `Δ₂` beat the budget-matched
/// baseline's? `(problem, hybrid median, baseline median, hybrid wins)`.
pub fn win_loss(rows: &[SummaryRow]) -> Vec<(String, f64, f64, bool)> {
    rows.iter()
        .filter(|r| r.mode == "hybrid")
        .filter_map(|h| {
            rows.iter()
                .find(|b| b.problem == h.problem && b.mode == "moea-alone-matched")
                .map(|b| (h.problem.clone(), h.median_d2, b.median_d2, h.median_d2 < b.median_d2))
        })
        .collect()
}
