//! Point selection: sampled expected improvement over a posterior ensemble,
//! closed-form Gaussian expected improvement, the plateau escape step, and
//! candidate generation for grid-free search.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::point::{bit_key, lex_cmp, sq_dist, Point};
use crate::rbf::{predict_sample, PosteriorEnsemble, SurrogateState};
use crate::stats;
use crate::testbed::Region;
use crate::{Error, Result};

/// Everything the selector sees at one iteration: the candidate set, the
/// explored points (excluded from selection), and the incumbent best
/// response on the original scale.
#[derive(Debug, Clone)]
pub struct AcquisitionContext<'a> {
    pub candidates: &'a [Point],
    pub explored: &'a [Point],
    pub f_max: f64,
}

/// Sampled expected improvement: (1/M)·Σ_m max{y⁽ᵐ⁾ − f_max, 0}.
pub fn sei(samples_at_x: &[f64], f_max: f64) -> f64 {
    assert!(!samples_at_x.is_empty(), "SEI needs at least one posterior sample");
    samples_at_x
        .iter()
        .map(|y| (y - f_max).max(0.0))
        .sum::<f64>()
        / samples_at_x.len() as f64
}

/// SEI at `x` evaluated directly from the posterior states against a
/// centered incumbent, without materializing the prediction vector.
fn sei_over_states(x: &[f64], states: &[SurrogateState], f_max_centered: f64) -> f64 {
    states
        .iter()
        .map(|st| (predict_sample(x, st) - f_max_centered).max(0.0))
        .sum::<f64>()
        / states.len() as f64
}

/// Closed-form Gaussian expected improvement
/// (μ−f_max)·Φ(z) + s0·φ(z) with z = (μ−f_max)/s0; max(μ−f_max, 0) at s0 = 0.
pub fn ei_gaussian(mu: f64, s0: f64, f_max: f64) -> f64 {
    debug_assert!(s0 >= 0.0);
    let diff = mu - f_max;
    if s0 == 0.0 {
        return diff.max(0.0);
    }
    let z = diff / s0;
    // The exact value is nonnegative; deep in the left tail the two terms
    // cancel to rounding noise, so clamp.
    (diff * stats::normal_cdf(z) + s0 * stats::normal_pdf(z)).max(0.0)
}

/// Argmax of SEI over the candidates not yet explored. Exact score ties are
/// broken uniformly at random with the run RNG.
pub fn select_next(
    ctx: &AcquisitionContext,
    ensemble: &PosteriorEnsemble,
    rng: &mut impl Rng,
) -> Result<Point> {
    assert!(!ensemble.states.is_empty());
    let explored_keys: HashSet<Vec<u64>> = ctx.explored.iter().map(|p| bit_key(p)).collect();
    let feasible: Vec<&Point> = ctx
        .candidates
        .iter()
        .filter(|p| !explored_keys.contains(&bit_key(p)))
        .collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleCandidates);
    }
    let f_max_centered = ctx.f_max - ensemble.y_mean;
    let scores: Vec<f64> = feasible
        .par_iter()
        .map(|p| sei_over_states(p, &ensemble.states, f_max_centered))
        .collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..feasible.len()).filter(|&i| scores[i] == best).collect();
    let pick = ties[rng.gen_range(0..ties.len())];
    Ok(feasible[pick].clone())
}

/// Write per-candidate acquisition scores as CSV rows `x_1,...,x_p,score`.
pub fn export_scores(path: impl AsRef<Path>, candidates: &[Point], scores: &[f64]) -> Result<()> {
    assert_eq!(candidates.len(), scores.len());
    let path = path.as_ref();
    let mut out = String::new();
    for (p, s) in candidates.iter().zip(scores) {
        for v in p {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&s.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(Error::io(path))
}

/// Book-keeping for the escape step: consecutive non-improvements trigger an
/// episode of maximin-distance exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscapeState {
    /// Consecutive non-improvement iterations.
    pub c_non: usize,
    /// Threshold of non-improvements that enters escape mode.
    pub m_i: usize,
    /// Maximum escape points added per episode.
    pub m_t: usize,
    pub in_escape: bool,
    pub added_this_episode: usize,
}

impl EscapeState {
    pub fn new(m_i: usize, m_t: usize) -> EscapeState {
        assert!(m_i >= 1 && m_t >= 1);
        EscapeState {
            c_non: 0,
            m_i,
            m_t,
            in_escape: false,
            added_this_episode: 0,
        }
    }
}

/// Advance the escape state after one evaluation. If the state was in escape
/// mode, the evaluated point was an escape point and counts toward the
/// episode. Improvement resets the counter and leaves escape mode; an
/// episode that adds M_T points without improvement also ends, with the
/// counter restarting from zero.
pub fn update_escape(es: EscapeState, improved: bool) -> EscapeState {
    let mut next = es;
    if next.in_escape {
        next.added_this_episode += 1;
    }
    if improved {
        next.c_non = 0;
        next.in_escape = false;
        next.added_this_episode = 0;
        return next;
    }
    next.c_non += 1;
    if next.in_escape {
        if next.added_this_episode >= next.m_t {
            next.in_escape = false;
            next.added_this_episode = 0;
            next.c_non = 0;
        }
    } else if next.c_non >= next.m_i {
        next.in_escape = true;
        next.added_this_episode = 0;
    }
    next
}

/// The candidate maximizing the minimum squared distance to the explored
/// points; ties go to the lexicographically smallest candidate. Candidates
/// at distance zero (already explored) are never returned.
pub fn maximin_distance_point(candidates: &[Point], explored: &[Point]) -> Result<Point> {
    assert!(!explored.is_empty());
    let mut best: Option<(f64, &Point)> = None;
    for p in candidates {
        let d = explored
            .iter()
            .map(|e| sq_dist(p, e))
            .fold(f64::INFINITY, f64::min);
        if d <= 0.0 {
            continue;
        }
        best = match best {
            None => Some((d, p)),
            Some((bd, bp)) => {
                if d > bd || (d == bd && lex_cmp(p, bp) == std::cmp::Ordering::Less) {
                    Some((d, p))
                } else {
                    Some((bd, bp))
                }
            }
        };
    }
    best.map(|(_, p)| p.clone()).ok_or(Error::NoFeasibleCandidates)
}

/// `count` independent uniform draws over the region; a fresh set each call.
pub fn sample_candidates_uniform(region: &Region, count: usize, rng: &mut impl Rng) -> Vec<Point> {
    (0..count)
        .map(|_| {
            region
                .bounds()
                .iter()
                .map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect()
        })
        .collect()
}
