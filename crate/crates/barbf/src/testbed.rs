//! Benchmark objectives, their rectangular domains, and evenly spaced
//! candidate grids with brute-force scanning for grid optima.
//!
//! All built-in problems are maximization problems on the unit box. Each is
//! addressable by name (`branin`, `ronkkonen2`, `ronkkonen3`, `hartmann4`,
//! `rastrigin:d`) so the CLI and config files can refer to them.

use std::fmt;
use std::sync::Arc;

use crate::point::Point;
use crate::{Error, Result};

/// Tolerance for closed-bound domain checks; endpoints are legitimate grid
/// points and may carry one ulp of lattice arithmetic error.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Tolerance under which two grid values count as the same maximizer.
/// Matches the harness hit tolerance so "number of grid maximizers" and
/// "replication hits" agree on what counts as reaching the optimum.
pub const MAXIMIZER_TOL: f64 = 1e-4;

/// An axis-aligned box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Region> {
        if bounds.is_empty() {
            return Err(Error::InvalidConfig("region must have dimension ≥ 1".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "region bounds must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Region { bounds })
    }

    /// The unit box [0,1]^dim.
    pub fn unit(dim: usize) -> Region {
        assert!(dim >= 1);
        Region {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Closed-bounds membership with tolerance [`DOMAIN_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| *v >= lo - DOMAIN_TOL && *v <= hi + DOMAIN_TOL)
    }

    /// Affine image of a unit-box point in this region.
    pub fn from_unit(&self, u: &[f64]) -> Point {
        debug_assert_eq!(u.len(), self.dim());
        u.iter()
            .zip(&self.bounds)
            .map(|(v, &(lo, hi))| lo + v * (hi - lo))
            .collect()
    }
}

fn check_unit_domain(x: &[f64], dim: usize) -> Result<()> {
    let ok = x.len() == dim
        && x.iter()
            .all(|v| *v >= -DOMAIN_TOL && *v <= 1.0 + DOMAIN_TOL);
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfDomain { point: x.to_vec() })
    }
}

/// Scaled Branin function on [0,1]², to be maximized. The grid restricted to
/// step 0.04 has its maximum 1.0473 at (0.96, 0.16) plus two local maxima.
pub fn eval_branin(x: &[f64]) -> Result<f64> {
    check_unit_domain(x, 2)?;
    let pi = std::f64::consts::PI;
    let xb1 = 15.0 * x[0] - 5.0;
    let xb2 = 15.0 * x[1];
    let a = xb2 - 5.1 * xb1 * xb1 / (4.0 * pi * pi) + 5.0 * xb1 / pi - 6.0;
    let inner = a * a + (10.0 - 10.0 / (8.0 * pi)) * xb1.cos() - 44.81;
    Ok(-inner / 51.95)
}

const RONKKONEN_P: [[f64; 5]; 3] = [
    [0.0, 0.1, 0.2, 0.5, 1.0],
    [0.0, 0.5, 0.8, 0.9, 1.0],
    [0.0, 0.6, 0.7, 0.9, 1.0],
];

const BINOM_4: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];

/// Degree-4 Bernstein polynomial with coefficient vector `p`.
fn bernstein4(p: &[f64; 5], x: f64) -> f64 {
    (0..=4)
        .map(|j| BINOM_4[j] * p[j] * (1.0 - x).powi(4 - j as i32) * x.powi(j as i32))
        .sum()
}

fn ronkkonen_with(x: &[f64], ps: &[[f64; 5]]) -> f64 {
    let pi = std::f64::consts::PI;
    let total: f64 = x
        .iter()
        .zip(ps)
        .map(|(xi, p)| {
            let w = bernstein4(p, *xi);
            (4.0 * pi * w).cos() + 0.8 * (8.0 * pi * w).cos()
        })
        .sum();
    -total / 2f64.powi(x.len() as i32)
}

/// Separable Bernstein-warped cosine function on [0,1]^d for d ∈ {2, 3}, to
/// be maximized. The cosine sum is scaled by 1/2^d, which places the
/// 0.04-grid maxima at 0.4777 (d=2, four maximizers) and 0.3584 (d=3, unique
/// maximizer at (0.32, 0.68, 0.44)).
pub fn eval_ronkkonen(x: &[f64]) -> Result<f64> {
    if x.len() != 2 && x.len() != 3 {
        return Err(Error::OutOfDomain { point: x.to_vec() });
    }
    check_unit_domain(x, x.len())?;
    Ok(ronkkonen_with(x, &RONKKONEN_P[..x.len()]))
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 4]; 4] = [
    [10.0, 3.0, 17.0, 3.5],
    [0.05, 10.0, 17.0, 0.1],
    [3.0, 3.5, 1.7, 10.0],
    [17.0, 8.0, 0.05, 10.0],
];
const HARTMANN_P: [[f64; 4]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124],
    [0.2329, 0.4135, 0.8307, 0.3736],
    [0.2348, 0.1451, 0.3522, 0.2883],
    [0.4047, 0.8828, 0.8732, 0.5743],
];

/// Rescaled four-dimensional Hartmann function on [0,1]⁴, to be maximized.
/// Its 0.05-grid maximum is 3.1218.
pub fn eval_hartmann4(x: &[f64]) -> Result<f64> {
    check_unit_domain(x, 4)?;
    let mut s = 0.0;
    for i in 0..4 {
        let inner: f64 = (0..4)
            .map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]).powi(2))
            .sum();
        s += HARTMANN_ALPHA[i] * (-inner).exp();
    }
    Ok(-(1.1 - s) / 0.839)
}

/// Shifted Rastrigin-style function on [0,1]^d, to be maximized:
/// −10d − Σ_i [(x_i − 0.5) − 10 cos(2π(x_i − 0.5))].
/// The per-coordinate term is linear (not squared), and f(0.5, ..., 0.5) = 0
/// exactly in floating point.
pub fn eval_rastrigin(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::OutOfDomain { point: x.to_vec() });
    }
    check_unit_domain(x, x.len())?;
    let tau = 2.0 * std::f64::consts::PI;
    let d = x.len() as f64;
    let s: f64 = x
        .iter()
        .map(|xi| (xi - 0.5) - 10.0 * (tau * (xi - 0.5)).cos())
        .sum();
    Ok(-10.0 * d - s)
}

#[derive(Clone)]
enum Objective {
    Branin,
    Ronkkonen,
    Hartmann4,
    Rastrigin,
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// A benchmark objective with its domain.
#[derive(Clone)]
pub struct TestProblem {
    name: String,
    region: Region,
    objective: Objective,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("dim", &self.region.dim())
            .finish()
    }
}

impl TestProblem {
    /// Resolve a problem by name: `branin`, `ronkkonen2`, `ronkkonen3`,
    /// `hartmann4`, or `rastrigin:d` with d ≥ 1.
    pub fn by_name(name: &str) -> Result<TestProblem> {
        let lower = name.trim().to_ascii_lowercase();
        let (region, objective) = match lower.as_str() {
            "branin" => (Region::unit(2), Objective::Branin),
            "ronkkonen2" => (Region::unit(2), Objective::Ronkkonen),
            "ronkkonen3" => (Region::unit(3), Objective::Ronkkonen),
            "hartmann4" => (Region::unit(4), Objective::Hartmann4),
            _ => match lower.strip_prefix("rastrigin:").and_then(|d| d.parse::<usize>().ok()) {
                Some(d) if d >= 1 => (Region::unit(d), Objective::Rastrigin),
                _ => return Err(Error::UnknownProblem(name.to_string())),
            },
        };
        Ok(TestProblem {
            name: lower,
            region,
            objective,
        })
    }

    /// Wrap an arbitrary deterministic objective for testing and extension.
    pub fn custom(
        name: impl Into<String>,
        region: Region,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> TestProblem {
        TestProblem {
            name: name.into(),
            region,
            objective: Objective::Custom(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Evaluate the objective, rejecting out-of-domain points.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match &self.objective {
            Objective::Branin => eval_branin(x),
            Objective::Ronkkonen => eval_ronkkonen(x),
            Objective::Hartmann4 => eval_hartmann4(x),
            Objective::Rastrigin => eval_rastrigin(x),
            Objective::Custom(f) => {
                if self.region.contains(x) {
                    Ok(f(x))
                } else {
                    Err(Error::OutOfDomain { point: x.to_vec() })
                }
            }
        }
    }

    /// Grid spacing used in the reference experiments, if this problem is
    /// grid-restricted by default.
    pub fn default_grid_step(&self) -> Option<f64> {
        match self.objective {
            Objective::Branin | Objective::Ronkkonen => Some(0.04),
            Objective::Hartmann4 => Some(0.05),
            Objective::Rastrigin | Objective::Custom(_) => None,
        }
    }

    /// Known continuous optimum, where one exists in closed form.
    pub fn known_optimum(&self) -> Option<f64> {
        match self.objective {
            Objective::Rastrigin => Some(0.0),
            _ => None,
        }
    }
}

/// An evenly spaced lattice of candidate points inside a region, in
/// lexicographic order by dimension index.
#[derive(Debug, Clone)]
pub struct CandidateGrid {
    points: Vec<Point>,
    step: Vec<f64>,
    counts: Vec<usize>,
}

impl CandidateGrid {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.step.len()
    }

    /// Index of the lattice point nearest to `x` (coordinate-wise rounding,
    /// exact thanks to the integer index construction).
    pub fn nearest_index(&self, x: &[f64], region: &Region) -> usize {
        debug_assert_eq!(x.len(), self.dim());
        let mut flat = 0;
        for j in 0..self.dim() {
            let (lo, _) = region.bounds()[j];
            let k_max = self.counts[j] - 1;
            let k = (((x[j] - lo) / self.step[j]).round().max(0.0) as usize).min(k_max);
            flat = flat * self.counts[j] + k;
        }
        flat
    }
}

/// Build the lattice lo, lo+step, ..., hi per dimension. The step must divide
/// every dimension's extent to within floating-point tolerance. Coordinates
/// come from integer index arithmetic (lo + k·step) rather than accumulation,
/// and the final coordinate is snapped to hi so endpoints are exact.
pub fn make_grid(region: &Region, step: f64) -> Result<CandidateGrid> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidConfig(format!("grid step must be positive, got {step}")));
    }
    let mut counts = Vec::with_capacity(region.dim());
    for &(lo, hi) in region.bounds() {
        let extent = hi - lo;
        let ratio = extent / step;
        let k_max = (ratio + 1e-9).floor();
        if (ratio - k_max).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "step {step} does not divide the extent [{lo}, {hi}]"
            )));
        }
        counts.push(k_max as usize + 1);
    }
    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; region.dim()];
    loop {
        let point: Point = idx
            .iter()
            .zip(region.bounds())
            .zip(&counts)
            .map(|((&k, &(lo, hi)), &count)| {
                let v = lo + k as f64 * step;
                if k + 1 == count && (v - hi).abs() <= 1e-9 * (hi - lo).max(1.0) {
                    hi
                } else {
                    v
                }
            })
            .collect();
        points.push(point);
        // odometer increment, last dimension fastest: lexicographic order
        let mut j = region.dim();
        loop {
            if j == 0 {
                return Ok(CandidateGrid {
                    points,
                    step: vec![step; counts.len()],
                    counts,
                });
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Result of an exhaustive grid scan.
#[derive(Debug, Clone)]
pub struct GridScan {
    /// Largest objective value over the grid.
    pub max_value: f64,
    /// First maximizer in grid (lexicographic) order.
    pub argmax: Point,
    /// All grid points within `tie_tol` of the maximum, in grid order.
    pub maximizers: Vec<Point>,
}

/// Evaluate the objective at every grid point and report the maximum.
pub fn scan_grid(problem: &TestProblem, grid: &CandidateGrid, tie_tol: f64) -> Result<GridScan> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("cannot scan an empty grid".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for p in grid.points() {
        values.push(problem.eval(p)?);
    }
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<Point> = grid
        .points()
        .iter()
        .zip(&values)
        .filter(|(_, &v)| max_value - v <= tie_tol)
        .map(|(p, _)| p.clone())
        .collect();
    let argmax = grid
        .points()
        .iter()
        .zip(&values)
        .find(|(_, &v)| v == max_value)
        .map(|(p, _)| p.clone())
        .expect("nonempty grid has a maximizer");
    Ok(GridScan {
        max_value,
        argmax,
        maximizers,
    })
}

/// Convenience: scan the problem's default (or given) grid.
pub fn scan_problem(problem: &TestProblem, step: Option<f64>, tie_tol: f64) -> Result<GridScan> {
    let step = step
        .or_else(|| problem.default_grid_step())
        .ok_or_else(|| {
            Error::InvalidConfig(format!("problem '{}' has no default grid step", problem.name()))
        })?;
    let grid = make_grid(problem.region(), step)?;
    scan_grid(problem, &grid, tie_tol)
}
