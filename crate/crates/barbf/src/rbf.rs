//! Gaussian radial-basis surrogate: basis evaluation, the N×N design matrix,
//! and prediction from posterior coefficient samples.
//!
//! The surrogate is f(x) = Σ_i β_i · exp(−s_i²‖x−μ_i‖²) with one basis per
//! explored point. Models are fit to centered responses y − ȳ; the ensemble
//! carries ȳ so summaries can report on the original scale.

use nalgebra::DMatrix;

use crate::point::{sq_dist, Point};
use crate::stats;

/// One Gaussian radial basis: a center μ and a scale s > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfBasis {
    pub center: Point,
    pub scale: f64,
}

impl RbfBasis {
    pub fn new(center: Point, scale: f64) -> RbfBasis {
        debug_assert!(scale > 0.0, "basis scale must be positive, got {scale}");
        RbfBasis { center, scale }
    }
}

/// exp(−s²‖x−μ‖²) ∈ (0, 1].
pub fn rbf_eval(x: &[f64], basis: &RbfBasis) -> f64 {
    (-basis.scale * basis.scale * sq_dist(x, &basis.center)).exp()
}

/// One posterior draw of the surrogate parameters.
#[derive(Debug, Clone)]
pub struct SurrogateState {
    /// Coefficients β, one per basis.
    pub beta: Vec<f64>,
    /// Spike-and-slab indicators γ ∈ {0, 1}, one per basis.
    pub gamma: Vec<u8>,
    /// Noise variance σ² > 0.
    pub sigma2: f64,
    /// The N bases (centers and scales).
    pub bases: Vec<RbfBasis>,
}

impl SurrogateState {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub(crate) fn check(&self) {
        debug_assert_eq!(self.beta.len(), self.bases.len());
        debug_assert_eq!(self.gamma.len(), self.bases.len());
        debug_assert!(self.sigma2 > 0.0);
        debug_assert!(self.gamma.iter().all(|&g| g <= 1));
    }
}

/// The retained posterior draws from one chain, with the centering constant.
#[derive(Debug, Clone)]
pub struct PosteriorEnsemble {
    pub states: Vec<SurrogateState>,
    /// ȳ, added back to centered predictions.
    pub y_mean: f64,
}

/// Matrix with entry (i, j) = rbf_eval(x_i, basis_j).
pub fn design_matrix(xs: &[Point], bases: &[RbfBasis]) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), bases.len(), |i, j| rbf_eval(&xs[i], &bases[j]))
}

/// Centered prediction Σ_i β_i · rbf_eval(x̃, basis_i) for one posterior draw.
pub fn predict_sample(x: &[f64], state: &SurrogateState) -> f64 {
    state
        .beta
        .iter()
        .zip(&state.bases)
        .map(|(b, basis)| b * rbf_eval(x, basis))
        .sum()
}

/// Ensemble prediction at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSummary {
    /// Average prediction across draws, on the original response scale.
    pub mean: f64,
    /// Sample variance of the draw predictions; absent for a single draw.
    pub variance: Option<f64>,
    /// 95% confidence-interval bandwidth: the 97.5% empirical quantile minus
    /// the 2.5% quantile of the draw predictions; absent for a single draw.
    pub cib: Option<f64>,
}

/// Summarize the ensemble's predictions at x̃: mean (with ȳ added back),
/// sample variance, and interval bandwidth. Quantiles interpolate linearly
/// between order statistics.
pub fn predict_summary(x: &[f64], ensemble: &PosteriorEnsemble) -> PredictionSummary {
    assert!(!ensemble.states.is_empty(), "ensemble must hold at least one draw");
    let draws: Vec<f64> = ensemble
        .states
        .iter()
        .map(|s| predict_sample(x, s))
        .collect();
    let mean = stats::mean(&draws) + ensemble.y_mean;
    if draws.len() < 2 {
        return PredictionSummary {
            mean,
            variance: None,
            cib: None,
        };
    }
    let variance = stats::sample_variance(&draws);
    let mut sorted = draws;
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite prediction"));
    let cib = stats::quantile_sorted(&sorted, 0.975) - stats::quantile_sorted(&sorted, 0.025);
    PredictionSummary {
        mean,
        variance: Some(variance),
        cib: Some(cib),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(center: &[f64], scale: f64) -> RbfBasis {
        RbfBasis::new(center.to_vec(), scale)
    }

    #[test]
    fn rbf_eval_known_values() {
        let b = basis(&[0.3, 0.7], 2.5);
        assert_eq!(rbf_eval(&[0.3, 0.7], &b), 1.0);
        let near_flat = basis(&[0.0, 0.0], 1e-8);
        assert_relative_eq!(rbf_eval(&[1.0, 1.0], &near_flat), 1.0, epsilon = 1e-12);
        // s = 2, ‖x−μ‖² = 0.25 → e⁻¹
        let b = basis(&[0.0, 0.0], 2.0);
        assert_relative_eq!(
            rbf_eval(&[0.3, 0.4], &b),
            0.36787944117144233,
            epsilon = 1e-15
        );
        // s = 1, unit distance → e⁻¹
        let b = basis(&[0.0], 1.0);
        assert_relative_eq!(rbf_eval(&[1.0], &b), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn design_matrix_diagonal_ones_for_data_centers() {
        let xs = vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.8, 0.3]];
        let bases: Vec<RbfBasis> = xs.iter().map(|x| basis(x, 3.0)).collect();
        let d = design_matrix(&xs, &bases);
        for i in 0..3 {
            assert_eq!(d[(i, i)], 1.0);
            for j in 0..3 {
                assert!(d[(i, j)] > 0.0 && d[(i, j)] <= 1.0);
            }
        }
        let one = design_matrix(&xs[..1], &bases[..1]);
        assert_eq!(one[(0, 0)], 1.0);
    }

    #[test]
    fn design_matrix_matches_entrywise_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<Point> = (0..3)
            .map(|_| (0..2).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let bases: Vec<RbfBasis> = (0..3)
            .map(|_| {
                basis(
                    &[rng.gen::<f64>(), rng.gen::<f64>()],
                    0.5 + 2.0 * rng.gen::<f64>(),
                )
            })
            .collect();
        let d = design_matrix(&xs, &bases);
        for i in 0..3 {
            for j in 0..3 {
                // recompute from scratch without sq_dist/rbf_eval
                let mut acc = 0.0;
                for k in 0..2 {
                    let diff = xs[i][k] - bases[j].center[k];
                    acc += diff * diff;
                }
                let expect = (-(bases[j].scale * bases[j].scale) * acc).exp();
                assert_relative_eq!(d[(i, j)], expect, epsilon = 1e-15);
            }
        }
    }

    fn state(beta: Vec<f64>, bases: Vec<RbfBasis>) -> SurrogateState {
        let gamma = vec![1; beta.len()];
        SurrogateState {
            beta,
            gamma,
            sigma2: 1.0,
            bases,
        }
    }

    #[test]
    fn predict_sample_basics() {
        let bases = vec![basis(&[0.2, 0.2], 1.0), basis(&[0.8, 0.8], 1.0)];
        let zero = state(vec![0.0, 0.0], bases.clone());
        assert_eq!(predict_sample(&[0.5, 0.5], &zero), 0.0);

        let single = state(vec![2.0], vec![basis(&[0.4, 0.6], 5.0)]);
        assert_eq!(predict_sample(&[0.4, 0.6], &single), 2.0);
    }

    #[test]
    fn predict_sample_linear_in_beta() {
        let bases = vec![basis(&[0.1, 0.9], 2.0), basis(&[0.6, 0.4], 0.7)];
        let s1 = state(vec![1.3, -0.4], bases.clone());
        let s2 = state(vec![2.6, -0.8], bases);
        let x = [0.33, 0.71];
        assert_relative_eq!(
            2.0 * predict_sample(&x, &s1),
            predict_sample(&x, &s2),
            epsilon = 1e-15
        );
    }

    #[test]
    fn summary_of_identical_states_has_zero_spread() {
        let s = state(vec![1.0], vec![basis(&[0.5], 1.0)]);
        let ensemble = PosteriorEnsemble {
            states: vec![s; 10],
            y_mean: 2.0,
        };
        let out = predict_summary(&[0.5], &ensemble);
        assert_relative_eq!(out.mean, 3.0, epsilon = 1e-15);
        assert_eq!(out.variance, Some(0.0));
        assert_eq!(out.cib, Some(0.0));
    }

    #[test]
    fn summary_two_state_mean() {
        let bases = vec![basis(&[0.0], 1.0)];
        let s0 = state(vec![0.0], bases.clone());
        let s2 = state(vec![2.0], bases);
        let ensemble = PosteriorEnsemble {
            states: vec![s0, s2],
            y_mean: 0.5,
        };
        // predictions at the center are exactly {0, 2}
        let out = predict_summary(&[0.0], &ensemble);
        assert_relative_eq!(out.mean, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn summary_single_state_signals_unavailable_spread() {
        let ensemble = PosteriorEnsemble {
            states: vec![state(vec![1.0], vec![basis(&[0.0], 1.0)])],
            y_mean: 0.0,
        };
        let out = predict_summary(&[0.3], &ensemble);
        assert_eq!(out.variance, None);
        assert_eq!(out.cib, None);
    }

    #[test]
    fn summary_cib_matches_quantile_closed_form() {
        // 1,000 states predicting i/999 at the basis center: the interpolated
        // 97.5%−2.5% bandwidth is exactly 0.95.
        let bases = vec![basis(&[0.0], 1.0)];
        let states: Vec<SurrogateState> = (0..1000)
            .map(|i| state(vec![i as f64 / 999.0], bases.clone()))
            .collect();
        let ensemble = PosteriorEnsemble {
            states,
            y_mean: 0.0,
        };
        let out = predict_summary(&[0.0], &ensemble);
        assert_relative_eq!(out.cib.unwrap(), 0.95, epsilon = 1e-12);
        assert_relative_eq!(out.mean, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn summary_mean_translates_with_y_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bases = vec![basis(&[0.2, 0.4], 1.5), basis(&[0.9, 0.1], 0.8)];
        let states: Vec<SurrogateState> = (0..50)
            .map(|_| state(vec![rng.gen::<f64>(), rng.gen::<f64>()], bases.clone()))
            .collect();
        let e0 = PosteriorEnsemble {
            states: states.clone(),
            y_mean: 0.0,
        };
        let e3 = PosteriorEnsemble {
            states,
            y_mean: 3.0,
        };
        let x = [0.5, 0.5];
        let a = predict_summary(&x, &e0);
        let b = predict_summary(&x, &e3);
        assert_relative_eq!(b.mean - a.mean, 3.0, epsilon = 1e-12);
        assert_eq!(a.variance, b.variance);
        assert_eq!(a.cib, b.cib);
    }
}
