//! `barbf` command line: single optimization runs, replicated table
//! reproductions, and brute-force grid scans.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use barbf::harness::{export_results, replicate, ReplicationSummary};
use barbf::optimizer::{export_trace, incumbent, run_optimization, Method, RunConfig};
use barbf::testbed::{scan_problem, TestProblem, MAXIMIZER_TOL};

#[derive(Parser)]
#[command(
    name = "barbf",
    version,
    about = "Surrogate-based global optimization of expensive black-box functions"
)]
struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One optimization run; prints the incumbent and optionally writes the
    /// full trace as CSV.
    Run(RunArgs),
    /// Many replications of one configuration; prints the summary table row
    /// and optionally exports summary.json and curves.csv.
    Replicate(ReplicateArgs),
    /// Brute-force evaluation of a problem on its candidate grid.
    Scan(ScanArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file ([run] and [replicate] sections); flags
    /// override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem name: branin, ronkkonen2, ronkkonen3, hartmann4, rastrigin:<d>.
    #[arg(long)]
    problem: Option<String>,
    /// Optimizer: barbf, m-barbf, barbf-gridfree, gmsrbf, ego.
    #[arg(long)]
    method: Option<Method>,
    /// Master seed for `run`, base seed for `replicate`.
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate grid spacing (grid methods).
    #[arg(long)]
    grid_step: Option<f64>,
    /// Uniform candidates per iteration (grid-free).
    #[arg(long)]
    candidates: Option<usize>,
    /// Total MCMC sweeps per surrogate refit.
    #[arg(long)]
    mcmc_iters: Option<usize>,
    /// Slab-to-spike scale multiplier.
    #[arg(long)]
    c_slab: Option<f64>,
    /// Initial design size.
    #[arg(long)]
    n_min: Option<usize>,
    /// Total evaluation budget.
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Write the evaluation trace as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplicateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Directory for summary.json and curves.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero if any replication fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ScanArgs {
    /// Problem name.
    #[arg(long)]
    problem: String,
    /// Grid spacing; defaults to the problem's standard grid.
    #[arg(long)]
    grid_step: Option<f64>,
}

/// On-disk configuration: a [run] table mirroring RunConfig plus a
/// [replicate] table for the harness.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    run: RunConfig,
    replicate: ReplicateSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReplicateSection {
    reps: usize,
    base_seed: u64,
}

impl Default for ReplicateSection {
    fn default() -> ReplicateSection {
        ReplicateSection {
            reps: 20,
            base_seed: 0,
        }
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// File (or per-problem defaults) first, then flag overrides.
fn resolve_config(args: &ConfigArgs) -> Result<(RunConfig, ReplicateSection)> {
    let (mut cfg, reps) = match &args.config {
        Some(path) => {
            let file = load_file_config(path)?;
            (file.run, file.replicate)
        }
        None => {
            let problem = args.problem.as_deref().unwrap_or("branin");
            let method = args.method.unwrap_or(Method::Barbf);
            (
                RunConfig::for_problem(problem, method)?,
                ReplicateSection::default(),
            )
        }
    };
    if let Some(problem) = &args.problem {
        cfg.problem = problem.clone();
    }
    if let Some(method) = args.method {
        cfg.method = method;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(step) = args.grid_step {
        cfg.grid_step = Some(step);
    }
    if let Some(count) = args.candidates {
        cfg.candidate_count = count;
    }
    if let Some(iters) = args.mcmc_iters {
        cfg.chain.iters = iters;
    }
    if let Some(c) = args.c_slab {
        cfg.hyper.c_slab = Some(c);
    }
    if let Some(n) = args.n_min {
        cfg.n_min = n;
    }
    if let Some(n) = args.n_max {
        cfg.n_max = n;
    }
    Ok((cfg, reps))
}

fn format_point(point: &[f64]) -> String {
    let coords: Vec<String> = point.iter().map(|c| format!("{c:.6}")).collect();
    format!("({})", coords.join(", "))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let (cfg, _) = resolve_config(&args.config)?;
    let trace = run_optimization(&cfg)?;
    let (point, value) = incumbent(&trace);
    println!("problem: {}  method: {}  seed: {}", cfg.problem, cfg.method, cfg.seed);
    println!("evaluations: {}", trace.len());
    println!("best value: {value:.6} at {}", format_point(&point));
    if let Some(path) = &args.out {
        export_trace(path, &trace)?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn print_summary(summary: &ReplicationSummary, reps: usize) {
    println!(
        "replications: {} requested, {} succeeded, {} failed",
        reps,
        summary.len(),
        summary.failures.len()
    );
    println!("mean best: {:.6}  std: {:.6}", summary.mean, summary.std);
    println!(
        "quantiles: q05 {:.6}  q25 {:.6}  median {:.6}  q75 {:.6}  q95 {:.6}",
        summary.q05, summary.q25, summary.median, summary.q75, summary.q95
    );
    match (summary.reference, summary.hits) {
        (Some(reference), Some(hits)) => {
            println!("reference optimum: {reference:.6}  hits: {hits}/{}", summary.len());
        }
        _ => println!("reference optimum: unknown"),
    }
}

fn cmd_replicate(args: &ReplicateArgs) -> Result<()> {
    let (cfg, section) = resolve_config(&args.config)?;
    let reps = args.reps.unwrap_or(section.reps);
    let base_seed = args.config.seed.unwrap_or(section.base_seed);
    println!(
        "problem: {}  method: {}  base seed: {base_seed}",
        cfg.problem, cfg.method
    );
    let (summary, curves) = replicate(&cfg, reps, base_seed)?;
    print_summary(&summary, reps);
    if let Some(dir) = &args.out {
        export_results(dir, &summary, &curves)?;
        println!("results written to {}", dir.display());
    }
    if args.strict && !summary.failures.is_empty() {
        bail!("{} of {} replications failed", summary.failures.len(), reps);
    }
    Ok(())
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let problem = TestProblem::by_name(&args.problem)?;
    let scan = scan_problem(&problem, args.grid_step, MAXIMIZER_TOL)?;
    let step = args
        .grid_step
        .or_else(|| problem.default_grid_step())
        .expect("scan_problem validated the step");
    println!("problem: {}  grid step: {step}", problem.name());
    println!(
        "grid maximum: {:.6} at {}",
        scan.max_value,
        format_point(&scan.argmax)
    );
    println!(
        "maximizers within {MAXIMIZER_TOL:.0e}: {}",
        scan.maximizers.len()
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Replicate(args) => cmd_replicate(args),
        Command::Scan(args) => cmd_scan(args),
    }
}
