//! Replication driver: runs a configuration many times with derived seeds,
//! aggregates the best values into table-style summaries and per-iteration
//! quantile curves, and exports both.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optimizer::{run_optimization, RunConfig, RunTrace};
use crate::stats::{mean, quantile_sorted, sample_variance};
use crate::testbed::{scan_problem, TestProblem, MAXIMIZER_TOL};
use crate::{Error, Result};

/// A replication counts as a hit when its best value is within this
/// distance of the reference optimum.
pub const HIT_TOL: f64 = 1e-4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Independent per-replication seed stream from one base seed.
pub fn derive_seed(base: u64, idx: usize) -> u64 {
    splitmix64(base ^ (idx as u64).wrapping_mul(0x9E3779B97F4A7C15))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub index: usize,
    pub message: String,
}

/// Distribution of final best values across replications, in the shape of
/// the result tables: quartiles plus 5%/95% tails, mean, standard deviation,
/// and the hit count against a reference optimum when one is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    /// Final best value of each successful replication, in replication order.
    pub best_values: Vec<f64>,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
    pub std: f64,
    /// Reference optimum the hit count is measured against, when known.
    pub reference: Option<f64>,
    /// Replications with |best − reference| ≤ [`HIT_TOL`].
    pub hits: Option<usize>,
    pub failures: Vec<ReplicationFailure>,
}

impl ReplicationSummary {
    pub fn from_best_values(best_values: Vec<f64>, reference: Option<f64>) -> ReplicationSummary {
        assert!(!best_values.is_empty());
        let mut sorted = best_values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let hits = reference.map(|r| {
            best_values
                .iter()
                .filter(|&&b| (b - r).abs() <= HIT_TOL)
                .count()
        });
        ReplicationSummary {
            q05: quantile_sorted(&sorted, 0.05),
            q25: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.50),
            q75: quantile_sorted(&sorted, 0.75),
            q95: quantile_sorted(&sorted, 0.95),
            mean: mean(&best_values),
            std: sample_variance(&best_values).sqrt(),
            reference,
            hits,
            best_values,
            failures: Vec::new(),
        }
    }

    /// Successful replication count.
    pub fn len(&self) -> usize {
        self.best_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best_values.is_empty()
    }
}

/// Mean and 5%/95% quantiles of best-so-far across replications, one entry
/// per sequential iteration (the initial design is excluded).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurves {
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

impl QuantileCurves {
    /// Aggregate traces column-wise, skipping the first `skip` evaluations
    /// (the initial design) of each.
    pub fn from_traces(traces: &[&RunTrace], skip: usize) -> QuantileCurves {
        assert!(!traces.is_empty());
        let len = traces[0].len();
        assert!(traces.iter().all(|t| t.len() == len));
        assert!(skip <= len);
        let mut curves = QuantileCurves::default();
        for j in skip..len {
            let mut column: Vec<f64> = traces.iter().map(|t| t.best_so_far[j]).collect();
            curves.mean.push(mean(&column));
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            curves.q05.push(quantile_sorted(&column, 0.05));
            curves.q95.push(quantile_sorted(&column, 0.95));
        }
        curves
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Reference optimum for hit counting: the brute-force grid maximum for
/// grid-restricted methods, the known continuous optimum otherwise.
fn reference_optimum(cfg: &RunConfig) -> Result<Option<f64>> {
    let problem = TestProblem::by_name(&cfg.problem)?;
    if cfg.method.uses_grid() {
        let step = cfg.grid_step.or_else(|| problem.default_grid_step());
        if step.is_some() {
            let scan = scan_problem(&problem, step, MAXIMIZER_TOL)?;
            return Ok(Some(scan.max_value));
        }
    }
    Ok(problem.known_optimum())
}

fn aggregate(
    results: Vec<(usize, Result<RunTrace>)>,
    reference: Option<f64>,
    skip: usize,
) -> Result<(ReplicationSummary, QuantileCurves)> {
    let total = results.len();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (index, result) in results {
        match result {
            Ok(trace) => traces.push(trace),
            Err(e) => {
                log::warn!("replication {index} failed: {e}");
                failures.push(ReplicationFailure {
                    index,
                    message: e.to_string(),
                });
            }
        }
    }
    if traces.is_empty() {
        return Err(Error::AllReplicationsFailed { reps: total });
    }
    let best: Vec<f64> = traces
        .iter()
        .map(|t| *t.best_so_far.last().unwrap())
        .collect();
    let mut summary = ReplicationSummary::from_best_values(best, reference);
    summary.failures = failures;
    let refs: Vec<&RunTrace> = traces.iter().collect();
    let curves = QuantileCurves::from_traces(&refs, skip);
    Ok((summary, curves))
}

/// Run `reps` independent replications of `cfg` with seeds derived from
/// `base_seed` and aggregate them. Replications run on the rayon pool;
/// aggregation is in replication order, so the output is deterministic in
/// (cfg, reps, base_seed) regardless of thread count. Failed replications
/// are excluded and recorded in the summary.
pub fn replicate(
    cfg: &RunConfig,
    reps: usize,
    base_seed: u64,
) -> Result<(ReplicationSummary, QuantileCurves)> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    cfg.validate()?;
    let reference = reference_optimum(cfg)?;
    let results: Vec<(usize, Result<RunTrace>)> = (0..reps)
        .into_par_iter()
        .map(|idx| {
            let mut rep_cfg = cfg.clone();
            rep_cfg.seed = derive_seed(base_seed, idx);
            (idx, run_optimization(&rep_cfg))
        })
        .collect();
    aggregate(results, reference, cfg.n_min)
}

/// Write `summary.json` and `curves.csv` (header `iteration,mean,q05,q95`,
/// one row per sequential iteration) under `dir`. Byte-stable for equal
/// inputs.
pub fn export_results(
    dir: impl AsRef<Path>,
    summary: &ReplicationSummary,
    curves: &QuantileCurves,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let summary_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(&summary_path, json).map_err(Error::io(&summary_path))?;

    let curves_path = dir.join("curves.csv");
    let mut text = String::from("iteration,mean,q05,q95\n");
    for j in 0..curves.len() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            j + 1,
            curves.mean[j],
            curves.q05[j],
            curves.q95[j]
        ));
    }
    std::fs::write(&curves_path, text).map_err(Error::io(&curves_path))?;
    Ok(())
}

/// Re-read an exported `summary.json`.
pub fn read_summary(path: impl AsRef<Path>) -> Result<ReplicationSummary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        what: format!("summary file {}", path.display()),
        detail: e.to_string(),
    })
}
