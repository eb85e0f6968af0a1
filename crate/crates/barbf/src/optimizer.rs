//! The sequential optimization loop: initial maximin design, per-iteration
//! surrogate refit, candidate selection, escape bookkeeping, and budget
//! accounting for every method.

use std::collections::HashSet;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    maximin_distance_point, sample_candidates_uniform, select_next, update_escape,
    AcquisitionContext, EscapeState,
};
use crate::baselines::{
    choose_scale_loo, default_scale_grid, ego_fit, ego_select, gmsrbf_fit, gmsrbf_select,
    WeightCycle,
};
use crate::design::{maximin_lhd_restarts, snap_to_grid, DEFAULT_LHD_RESTARTS};
use crate::mcmc::{default_hyperparams, run_chain_with_diagnostics, ChainConfig, HyperOverrides};
use crate::point::{bit_key, Point};
use crate::testbed::{make_grid, TestProblem};
use crate::{Error, Result};

/// Which optimizer drives the sequential loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Barbf,
    MBarbf,
    BarbfGridfree,
    Gmsrbf,
    Ego,
}

impl Method {
    /// Grid methods select from a fixed candidate grid and snap the initial
    /// design onto it; the grid-free variant resamples candidates uniformly
    /// every iteration.
    pub fn uses_grid(&self) -> bool {
        !matches!(self, Method::BarbfGridfree)
    }

    pub fn all() -> [Method; 5] {
        [
            Method::Barbf,
            Method::MBarbf,
            Method::BarbfGridfree,
            Method::Gmsrbf,
            Method::Ego,
        ]
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Barbf => "barbf",
            Method::MBarbf => "m-barbf",
            Method::BarbfGridfree => "barbf-gridfree",
            Method::Gmsrbf => "gmsrbf",
            Method::Ego => "ego",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "barbf" => Ok(Method::Barbf),
            "m-barbf" => Ok(Method::MBarbf),
            "barbf-gridfree" => Ok(Method::BarbfGridfree),
            "gmsrbf" => Ok(Method::Gmsrbf),
            "ego" => Ok(Method::Ego),
            _ => Err(Error::Parse {
                what: "method".into(),
                detail: format!(
                    "unknown method {s:?}; expected barbf, m-barbf, barbf-gridfree, gmsrbf, or ego"
                ),
            }),
        }
    }
}

/// Everything needed to reproduce one optimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub method: Method,
    /// Initial maximin-LHD size.
    pub n_min: usize,
    /// Total evaluation budget, initial design included.
    pub n_max: usize,
    /// Grid spacing for grid methods; None falls back to the problem default.
    pub grid_step: Option<f64>,
    /// Uniform candidates per iteration for the grid-free variant.
    pub candidate_count: usize,
    pub chain: ChainConfig,
    pub hyper: HyperOverrides,
    /// Consecutive non-improvements before escape mode starts.
    pub escape_m_i: usize,
    /// Maximin points added per escape episode.
    pub escape_m_t: usize,
    pub lhd_restarts: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            problem: "branin".into(),
            method: Method::Barbf,
            n_min: 16,
            n_max: 46,
            grid_step: None,
            candidate_count: 8_000,
            chain: ChainConfig::default(),
            hyper: HyperOverrides::default(),
            escape_m_i: 3,
            escape_m_t: 3,
            lhd_restarts: DEFAULT_LHD_RESTARTS,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Default budgets by dimension: 16+30 in 2-d, 50+50 in 3-4-d,
    /// 10p + 60 above.
    pub fn for_problem(problem: &str, method: Method) -> Result<RunConfig> {
        let p = TestProblem::by_name(problem)?.dim();
        let (n_min, n_max) = match p {
            0 | 1 | 2 => (16, 46),
            3 | 4 => (50, 100),
            _ => (10 * p, 10 * p + 60),
        };
        Ok(RunConfig {
            problem: problem.into(),
            method,
            n_min,
            n_max,
            ..RunConfig::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min < 2 {
            return Err(Error::InvalidConfig(format!(
                "initial design size must be at least 2, got {}",
                self.n_min
            )));
        }
        if self.n_min >= self.n_max {
            return Err(Error::InvalidConfig(format!(
                "budget must exceed the initial design: n_min = {}, n_max = {}",
                self.n_min, self.n_max
            )));
        }
        if !self.method.uses_grid() && self.candidate_count == 0 {
            return Err(Error::InvalidConfig(
                "grid-free runs need at least one candidate per iteration".into(),
            ));
        }
        if self.escape_m_i == 0 || self.escape_m_t == 0 {
            return Err(Error::InvalidConfig(
                "escape thresholds must be positive".into(),
            ));
        }
        if self.lhd_restarts == 0 {
            return Err(Error::InvalidConfig(
                "the design search needs at least one restart".into(),
            ));
        }
        self.chain.validate()
    }
}

/// How one evaluation's input was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionKind {
    /// Part of the initial space-filling design.
    Initial,
    /// Sampled-EI argmax under the posterior ensemble.
    Sei,
    /// Maximin-distance escape point.
    Escape,
    /// Weighted response/distance merit.
    Gmsrbf,
    /// Closed-form EI under the GP.
    Ego,
}

impl fmt::Display for SelectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SelectionKind::Initial => "initial",
            SelectionKind::Sei => "sei",
            SelectionKind::Escape => "escape",
            SelectionKind::Gmsrbf => "gmsrbf",
            SelectionKind::Ego => "ego",
        };
        f.write_str(name)
    }
}

/// Per-evaluation bookkeeping beyond the point and its response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationMeta {
    pub kind: SelectionKind,
    /// MH center acceptance rate of the chain behind this selection.
    pub accept_mu: Option<f64>,
    /// MH scale acceptance rate of the chain behind this selection.
    pub accept_s: Option<f64>,
    /// Distance weight used by the cycled merit, when that selected.
    pub omega: Option<f64>,
}

impl IterationMeta {
    fn bare(kind: SelectionKind) -> IterationMeta {
        IterationMeta {
            kind,
            accept_mu: None,
            accept_s: None,
            omega: None,
        }
    }
}

/// Complete record of one run: every evaluation in order plus the running
/// best. `best_so_far` is monotone nondecreasing and has one entry per
/// evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub best_so_far: Vec<f64>,
    pub meta: Vec<IterationMeta>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push(&mut self, point: Point, value: f64, meta: IterationMeta) {
        let best = match self.best_so_far.last() {
            Some(&b) => b.max(value),
            None => value,
        };
        self.points.push(point);
        self.values.push(value);
        self.best_so_far.push(best);
        self.meta.push(meta);
    }
}

/// Best explored point and its response; ties go to the earliest evaluation.
pub fn incumbent(trace: &RunTrace) -> (Point, f64) {
    assert!(!trace.is_empty());
    let mut best = 0;
    for i in 1..trace.values.len() {
        if trace.values[i] > trace.values[best] {
            best = i;
        }
    }
    (trace.points[best].clone(), trace.values[best])
}

/// Write a trace as CSV, one evaluation per line:
/// `index,x_1,...,x_p,value,best,kind,accept_mu,accept_s,omega`.
pub fn export_trace(path: impl AsRef<Path>, trace: &RunTrace) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::fs::File::create(path).map_err(Error::io(path))?;
    let dim = trace.points.first().map_or(0, |p| p.len());
    let mut header = String::from("index");
    for j in 1..=dim {
        header.push_str(&format!(",x{j}"));
    }
    header.push_str(",value,best,kind,accept_mu,accept_s,omega");
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(out, "{header}").map_err(Error::io(path))?;
    for i in 0..trace.len() {
        let coords: Vec<String> = trace.points[i].iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i,
            coords.join(","),
            trace.values[i],
            trace.best_so_far[i],
            trace.meta[i].kind,
            fmt_opt(trace.meta[i].accept_mu),
            fmt_opt(trace.meta[i].accept_s),
            fmt_opt(trace.meta[i].omega),
        )
        .map_err(Error::io(path))?;
    }
    Ok(())
}

/// Run the configured method on the named built-in problem.
pub fn run_optimization(cfg: &RunConfig) -> Result<RunTrace> {
    let problem = TestProblem::by_name(&cfg.problem)?;
    run_on_problem(cfg, &problem)
}

/// Run the configured method on an arbitrary problem (the config's problem
/// name is ignored). One evaluation per iteration until exactly `n_max`
/// objective calls have been spent.
pub fn run_on_problem(cfg: &RunConfig, problem: &TestProblem) -> Result<RunTrace> {
    cfg.validate()?;
    let p = problem.dim();
    let region = problem.region();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // The initial design consumes the first seed draw, so every method
    // started from the same master seed explores the same n_min points.
    let lhd_seed = rng.gen::<u64>();
    let mut lhd_rng = ChaCha8Rng::seed_from_u64(lhd_seed);
    let unit_design = maximin_lhd_restarts(cfg.n_min, p, cfg.lhd_restarts, &mut lhd_rng);
    let scaled: Vec<Point> = unit_design.iter().map(|u| region.from_unit(u)).collect();

    let grid = if cfg.method.uses_grid() {
        let step = cfg
            .grid_step
            .or_else(|| problem.default_grid_step())
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "method {} needs a grid step for problem {}",
                    cfg.method,
                    problem.name()
                ))
            })?;
        Some(make_grid(region, step)?)
    } else {
        None
    };
    let design = match &grid {
        Some(g) => snap_to_grid(&scaled, g, region)?,
        None => scaled,
    };

    let mut trace = RunTrace {
        points: Vec::with_capacity(cfg.n_max),
        values: Vec::with_capacity(cfg.n_max),
        best_so_far: Vec::with_capacity(cfg.n_max),
        meta: Vec::with_capacity(cfg.n_max),
    };
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(cfg.n_max);
    let mut evaluate = |x: Point, meta: IterationMeta, trace: &mut RunTrace| -> Result<()> {
        assert!(seen.insert(bit_key(&x)), "point evaluated twice: {x:?}");
        let value = problem.eval(&x).map_err(|e| Error::RunAborted {
            evaluated: trace.len(),
            source: Box::new(e),
        })?;
        trace.push(x, value, meta);
        Ok(())
    };

    for x in design {
        evaluate(x, IterationMeta::bare(SelectionKind::Initial), &mut trace)?;
    }

    // Shared fixed scale for the interpolating baseline and the chain's
    // initial state, chosen once from the initial design.
    let init_scale = match choose_scale_loo(&trace.points, &trace.values, &default_scale_grid()) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("initial-design scale selection failed ({e}); using 1.0");
            1.0
        }
    };

    let mut escape = EscapeState::new(cfg.escape_m_i, cfg.escape_m_t);
    let mut cycle = WeightCycle::new();

    while trace.len() < cfg.n_max {
        let chain_seed = rng.gen::<u64>();
        let fresh_candidates;
        let candidates: &[Point] = match &grid {
            Some(g) => g.points(),
            None => {
                fresh_candidates = sample_candidates_uniform(region, cfg.candidate_count, &mut rng);
                &fresh_candidates
            }
        };
        let f_max = *trace.best_so_far.last().unwrap();

        let (next, meta) = match cfg.method {
            Method::Barbf | Method::MBarbf | Method::BarbfGridfree => {
                if cfg.method == Method::MBarbf && escape.in_escape {
                    let point = maximin_distance_point(candidates, &trace.points)?;
                    (point, IterationMeta::bare(SelectionKind::Escape))
                } else {
                    let mut hp =
                        default_hyperparams(&trace.points, &trace.values, cfg.hyper.c_slab)?;
                    cfg.hyper.apply(&mut hp);
                    let mut chain = cfg.chain.clone();
                    chain.seed = chain_seed;
                    chain.init_scale = init_scale;
                    let (ensemble, diag) =
                        run_chain_with_diagnostics(&trace.points, &trace.values, &hp, &chain)?;
                    let ctx = AcquisitionContext {
                        candidates,
                        explored: &trace.points,
                        f_max,
                    };
                    let point = select_next(&ctx, &ensemble, &mut rng)?;
                    let meta = IterationMeta {
                        kind: SelectionKind::Sei,
                        accept_mu: diag.accept_mu,
                        accept_s: diag.accept_s,
                        omega: None,
                    };
                    (point, meta)
                }
            }
            Method::Gmsrbf => {
                let model = gmsrbf_fit(&trace.points, &trace.values, init_scale)?;
                let (point, omega) =
                    gmsrbf_select(candidates, &model, &trace.points, &mut cycle)?;
                let meta = IterationMeta {
                    kind: SelectionKind::Gmsrbf,
                    accept_mu: None,
                    accept_s: None,
                    omega: Some(omega),
                };
                (point, meta)
            }
            Method::Ego => {
                let gp = ego_fit(&trace.points, &trace.values)?;
                let point = ego_select(candidates, &gp, &trace.points, f_max)?;
                (point, IterationMeta::bare(SelectionKind::Ego))
            }
        };

        let before = f_max;
        evaluate(next, meta, &mut trace)?;
        if cfg.method == Method::MBarbf {
            let improved = *trace.values.last().unwrap() > before;
            escape = update_escape(escape, improved);
        }
    }

    Ok(trace)
}
