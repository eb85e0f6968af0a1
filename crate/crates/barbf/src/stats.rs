//! Small statistical helpers shared by the surrogate, baselines, and harness.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

pub fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "mean of empty slice");
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n−1 denominator); 0 for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Quantile with linear interpolation between order statistics (type 7):
/// h = (n−1)q, result = x[⌊h⌋] + (h−⌊h⌋)(x[⌊h⌋+1] − x[⌊h⌋]).
/// `sorted` must be ascending and nonempty; `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&q), "quantile level out of range");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 == sorted.len() {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal cumulative distribution function. The complementary-erf
/// form keeps relative accuracy in the left tail, where 1 + erf cancels.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Log-density of N(mean, sd²) at x.
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
}

/// CDF of the inverse gamma distribution with the given shape and rate
/// (density ∝ x^{−shape−1} e^{−rate/x}): P(X ≤ x) = Q(shape, rate/x),
/// the regularized upper incomplete gamma function.
pub fn inverse_gamma_cdf(x: f64, shape: f64, rate: f64) -> f64 {
    assert!(shape > 0.0 && rate > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    gamma_ur(shape, rate / x)
}
