//! Deterministic interpolating-RBF optimizer: exact Gaussian-RBF
//! interpolation, leave-one-out scale selection, and selection by a cycled
//! weighted average of scaled response and distance merits.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::point::{bit_key, lex_cmp, sq_dist, Point};
use crate::{Error, Result};

/// Interpolating Gaussian-RBF surrogate s_N(x) = Σ_i λ_i e^{−s²‖x−x_i‖²}.
#[derive(Debug, Clone)]
pub struct GmsrbfModel {
    pub lambdas: Vec<f64>,
    pub scale: f64,
    pub centers: Vec<Point>,
}

fn kernel_matrix(xs: &[Point], s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), xs.len(), |i, j| {
        (-s * s * sq_dist(&xs[i], &xs[j])).exp()
    })
}

fn check_distinct(xs: &[Point]) -> Result<()> {
    let mut keys: Vec<Vec<u64>> = xs.iter().map(|p| bit_key(p)).collect();
    keys.sort();
    if keys.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(
            "duplicate explored points cannot be interpolated".into(),
        ));
    }
    Ok(())
}

/// Solve Φλ = F for the interpolation coefficients; jitter 1e-10·I once if
/// the Gaussian kernel matrix is numerically indefinite.
pub fn gmsrbf_fit(xs: &[Point], y: &[f64], s: f64) -> Result<GmsrbfModel> {
    assert_eq!(xs.len(), y.len());
    assert!(!xs.is_empty());
    assert!(s > 0.0);
    check_distinct(xs)?;
    let phi = kernel_matrix(xs, s);
    let f = DVector::from_column_slice(y);
    let chol = match Cholesky::new(phi.clone()) {
        Some(c) => c,
        None => {
            let n = xs.len();
            let mut jittered = phi;
            for i in 0..n {
                jittered[(i, i)] += 1e-10;
            }
            Cholesky::new(jittered).ok_or_else(|| {
                Error::SingularSystem("RBF interpolation matrix not positive definite".into())
            })?
        }
    };
    Ok(GmsrbfModel {
        lambdas: chol.solve(&f).as_slice().to_vec(),
        scale: s,
        centers: xs.to_vec(),
    })
}

impl GmsrbfModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let s2 = self.scale * self.scale;
        self.lambdas
            .iter()
            .zip(&self.centers)
            .map(|(l, c)| l * (-s2 * sq_dist(x, c)).exp())
            .sum()
    }
}

/// Leave-one-out prediction error cost for one scale via the closed form
/// e_i = λ_i / (Φ⁻¹)_ii; None when Φ is singular for this scale.
fn loo_cost(xs: &[Point], y: &[f64], s: f64) -> Option<f64> {
    let phi = kernel_matrix(xs, s);
    let chol = Cholesky::new(phi)?;
    let lambda = chol.solve(&DVector::from_column_slice(y));
    let inv = chol.inverse();
    let mut cost = 0.0;
    for i in 0..xs.len() {
        let e = lambda[i] / inv[(i, i)];
        cost += e * e;
    }
    Some(cost)
}

/// 20 log-spaced scale candidates in [0.1, 50].
pub fn default_scale_grid() -> Vec<f64> {
    let (lo, hi) = (0.1f64.ln(), 50f64.ln());
    (0..20)
        .map(|k| (lo + (hi - lo) * k as f64 / 19.0).exp())
        .collect()
}

/// Scale minimizing the leave-one-out cost over the candidate grid; cost
/// ties go to the smallest scale. Scales with singular kernel matrices are
/// skipped; if every candidate is singular that is a hard error.
pub fn choose_scale_loo(xs: &[Point], y: &[f64], s_grid: &[f64]) -> Result<f64> {
    assert!(!s_grid.is_empty());
    check_distinct(xs)?;
    let mut best: Option<(f64, f64)> = None; // (cost, s)
    for &s in s_grid {
        let Some(cost) = loo_cost(xs, y, s) else {
            continue;
        };
        best = match best {
            None => Some((cost, s)),
            Some((bc, bs)) => {
                if cost < bc || (cost == bc && s < bs) {
                    Some((cost, s))
                } else {
                    Some((bc, bs))
                }
            }
        };
    }
    best.map(|(_, s)| s).ok_or_else(|| {
        Error::SingularSystem("every candidate scale gave a singular kernel matrix".into())
    })
}

/// The periodic selection weights (1, 0.8, 0.6, 0.4, 0.2, 1, ...).
#[derive(Debug, Clone, Default)]
pub struct WeightCycle {
    cursor: usize,
}

impl WeightCycle {
    pub const WEIGHTS: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];

    pub fn new() -> WeightCycle {
        WeightCycle { cursor: 0 }
    }

    /// Read the current weight and advance.
    pub fn advance(&mut self) -> f64 {
        let w = Self::WEIGHTS[self.cursor];
        self.cursor = (self.cursor + 1) % Self::WEIGHTS.len();
        w
    }
}

/// Min-max scale values to [0, 1]; a constant vector maps to all ones.
fn min_max_scaled(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![1.0; values.len()]
    }
}

/// Pick the feasible candidate maximizing
/// W_N = (1−ω)·V_R + ω·V_D, where V_R min-max scales the surrogate
/// predictions and V_D min-max scales the minimum squared distance to the
/// explored points, both over the feasible candidates. Advances the weight
/// cycle by one read; ties go to the lexicographically smallest candidate.
/// Returns the chosen point together with the weight used.
pub fn gmsrbf_select(
    candidates: &[Point],
    model: &GmsrbfModel,
    explored: &[Point],
    cycle: &mut WeightCycle,
) -> Result<(Point, f64)> {
    let explored_keys: std::collections::HashSet<Vec<u64>> =
        explored.iter().map(|p| bit_key(p)).collect();
    let feasible: Vec<&Point> = candidates
        .iter()
        .filter(|p| !explored_keys.contains(&bit_key(p)))
        .collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleCandidates);
    }
    let omega = cycle.advance();
    let predictions: Vec<f64> = feasible.iter().map(|p| model.predict(p)).collect();
    let distances: Vec<f64> = feasible
        .iter()
        .map(|p| {
            explored
                .iter()
                .map(|e| sq_dist(p, e))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let v_r = min_max_scaled(&predictions);
    let v_d = min_max_scaled(&distances);
    let mut best = 0;
    let mut best_w = f64::NEG_INFINITY;
    for i in 0..feasible.len() {
        let w = (1.0 - omega) * v_r[i] + omega * v_d[i];
        if w > best_w || (w == best_w && lex_cmp(feasible[i], feasible[best]) == std::cmp::Ordering::Less)
        {
            best = i;
            best_w = w;
        }
    }
    Ok((feasible[best].clone(), omega))
}
