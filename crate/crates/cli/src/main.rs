mod check;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmdn::hybrid::{run_hybrid, summarize, win_loss, Mode, RunConfig, RunRecord};
use mmdn::problems::problem_names;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "mmdn", version, about = "NSGA-II warm start followed by MMD-Newton refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration, seeds one after another.
    Run(RunArgs),
    /// Run one configuration with seeds spread over a worker pool.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Median and 10%/90% quantiles of the final Δ₂ in record files.
    Stats {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Also write the summary to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in invariant and oracle checks.
    Check,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with `RunConfig` fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// hybrid, moea-alone or mmdn-only.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// auto, paper-table-3, gaussian or laplace.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated seeds or half-open ranges, e.g. `0..10` or `1,5,7..9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory for records.jsonl and summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Usage or configuration problem: exit status 2.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, UsageError> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
                if b <= a {
                    return Err(UsageError(format!("empty seed range {part}")));
                }
                seeds.extend(a..b);
            }
            None => seeds.push(part.parse()?),
        }
    }
    if seeds.is_empty() {
        return Err(UsageError("no seeds given".into()));
    }
    Ok(seeds)
}

fn load_config(args: &RunArgs) -> Result<RunConfig, UsageError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = &args.problem {
        cfg.problem = p.clone();
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if args.mu.is_some() {
        cfg.mu = args.mu;
    }
    if let Some(n) = args.n1 {
        cfg.n1 = n;
    }
    if let Some(n) = args.n2 {
        cfg.n2 = n;
    }
    if let Some(k) = &args.kernel {
        cfg.kernel = k.clone();
    }
    if args.theta.is_some() {
        cfg.theta = args.theta;
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.display().to_string());
    }
    if !problem_names().contains(&cfg.problem.as_str()) {
        return Err(UsageError(format!(
            "unknown problem `{}`; available problems: {}",
            cfg.problem,
            problem_names().join(", ")
        )));
    }
    cfg.validate()?;
    cfg.make_problem()?;
    if cfg.seeds.is_empty() {
        return Err(UsageError("no seeds given".into()));
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(cfg.out.as_deref().unwrap_or("results"))
}

/// Reports each seed and writes the outputs. Ok(false) when a seed failed.
fn finish(cfg: &RunConfig, results: Vec<(u64, mmdn::Result<RunRecord>)>) -> Result<bool, UsageError> {
    let mut ok = true;
    let mut records = Vec::new();
    for (seed, res) in results {
        match res {
            Ok(r) => {
                match (&r.failed, &r.baseline) {
                    (Some(msg), _) => {
                        ok = false;
                        eprintln!("seed {seed}: failed: {msg}");
                    }
                    (None, Some(b)) => println!(
                        "seed {seed}: Δ₂ {:.6} (baseline {:.6}, +{} generations), {:.1} s",
                        r.final_d2, b.final_d2, b.extra_generations, r.wall_time_s
                    ),
                    (None, None) => println!("seed {seed}: Δ₂ {:.6}, {:.1} s", r.final_d2, r.wall_time_s),
                }
                for w in &r.warnings {
                    eprintln!("seed {seed}: warning: {w}");
                }
                records.push(r);
            }
            Err(e) => {
                ok = false;
                eprintln!("seed {seed}: error: {e}");
            }
        }
    }
    let dir = out_dir(cfg);
    std::fs::create_dir_all(&dir).map_err(|e| UsageError(format!("cannot create {}: {e}", dir.display())))?;
    let jsonl = dir.join("records.jsonl");
    output::append_records(&jsonl, &records)?;
    let all = output::read_records(&[jsonl.clone()])?;
    let rows = summarize(&all);
    output::write_summary(&dir.join("summary.csv"), &rows)?;
    println!("{} records appended to {}", records.len(), jsonl.display());
    output::print_summary(&rows, &win_loss(&rows));
    Ok(ok)
}

fn run(args: &RunArgs) -> Result<bool, UsageError> {
    let cfg = load_config(args)?;
    let results = cfg.seeds.iter().map(|&s| (s, run_hybrid(&cfg, s))).collect();
    finish(&cfg, results)
}

fn bench(args: &RunArgs, jobs: Option<usize>) -> Result<bool, UsageError> {
    let cfg = load_config(args)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let results = pool.install(|| cfg.seeds.par_iter().map(|&s| (s, run_hybrid(&cfg, s))).collect());
    finish(&cfg, results)
}

fn stats(paths: &[PathBuf], csv: Option<&Path>) -> Result<bool, UsageError> {
    let records = output::read_records(paths)?;
    let rows = summarize(&records);
    if let Some(path) = csv {
        output::write_summary(path, &rows)?;
    }
    output::print_summary(&rows, &win_loss(&rows));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Bench { run, jobs } => bench(run, *jobs),
        Command::Stats { records, csv } => stats(records, csv.as_deref()),
        Command::Check => Ok(check::run_all()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
