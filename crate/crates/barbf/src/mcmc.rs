//! Posterior sampling for the surrogate parameters (β, γ, σ², μ, s).
//!
//! One sweep runs, in order: a conjugate draw of β, a conjugate draw of σ²,
//! sequential draws of the spike-and-slab indicators γ_i, then
//! Metropolis-Hastings moves for the centers μ_i (optional) and the scales
//! (one shared s, or one per basis). States after burn-in are retained on a
//! thinning stride and returned as a [`PosteriorEnsemble`].
//!
//! The default operating mode keeps the centers fixed at the explored points
//! and updates a single shared scale; the fully adaptive mode is available
//! through [`ChainConfig`].

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::point::Point;
use crate::rbf::{design_matrix, rbf_eval, PosteriorEnsemble, RbfBasis, SurrogateState};
use crate::stats;
use crate::{Error, Result};

/// Prior and proposal parameters for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Slab multiplier C: the slab standard deviation is C·τ_i.
    pub c_slab: f64,
    /// Spike standard deviations τ_i, one per coefficient.
    pub tau: Vec<f64>,
    /// Prior probability p_i of γ_i = 0 (same for all i).
    pub p_spike: f64,
    /// Gamma-prior shape for the scales.
    pub a_s: f64,
    /// Gamma-prior rate for the scales; 0 leaves the prior improper, which
    /// is fine because only the kernel s^{a_s−1}e^{−b_s·s} enters the
    /// acceptance ratio.
    pub b_s: f64,
    /// Inverse-gamma prior parameters for σ²: IG(ν₀/2, ζ₀/2).
    pub nu0: f64,
    pub zeta0: f64,
    /// Proposal variance for center moves.
    pub sigma2_mu: f64,
    /// Proposal variance for scale moves.
    pub sigma2_s: f64,
    /// Weight of the uniform component in the center-proposal mixture.
    pub omega_mix: f64,
}

impl HyperParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.c_slab > 0.0) {
            return bad(format!("slab multiplier must be positive, got {}", self.c_slab));
        }
        if self.tau.len() != n {
            return bad(format!("need {n} spike scales, got {}", self.tau.len()));
        }
        if !self.tau.iter().all(|t| *t > 0.0) {
            return bad("spike scales must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_spike) {
            return bad(format!("p_spike must lie in [0,1], got {}", self.p_spike));
        }
        if !(self.a_s > 0.0) || self.b_s < 0.0 {
            return bad(format!("scale prior needs a_s > 0, b_s ≥ 0, got ({}, {})", self.a_s, self.b_s));
        }
        if !(self.nu0 > 0.0) || !(self.zeta0 > 0.0) {
            return bad(format!("σ² prior needs ν₀, ζ₀ > 0, got ({}, {})", self.nu0, self.zeta0));
        }
        if !(self.sigma2_mu > 0.0) || !(self.sigma2_s > 0.0) {
            return bad("proposal variances must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.omega_mix) {
            return bad(format!("omega_mix must lie in [0,1], got {}", self.omega_mix));
        }
        Ok(())
    }
}

/// Optional overrides for the data-derived defaults, e.g. from a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperOverrides {
    pub c_slab: Option<f64>,
    pub p_spike: Option<f64>,
    pub a_s: Option<f64>,
    pub b_s: Option<f64>,
    pub nu0: Option<f64>,
    pub sigma2_mu: Option<f64>,
    pub sigma2_s: Option<f64>,
    pub omega_mix: Option<f64>,
}

impl HyperOverrides {
    pub fn apply(&self, hp: &mut HyperParams) {
        if let Some(v) = self.c_slab {
            hp.c_slab = v;
        }
        if let Some(v) = self.p_spike {
            hp.p_spike = v;
        }
        if let Some(v) = self.a_s {
            hp.a_s = v;
        }
        if let Some(v) = self.b_s {
            hp.b_s = v;
        }
        if let Some(v) = self.nu0 {
            hp.nu0 = v;
        }
        if let Some(v) = self.sigma2_mu {
            hp.sigma2_mu = v;
        }
        if let Some(v) = self.sigma2_s {
            hp.sigma2_s = v;
        }
        if let Some(v) = self.omega_mix {
            hp.omega_mix = v;
        }
    }
}

/// Default slab multiplier by problem dimension: 25 (2D), 15 (3D), 10 (4D
/// and above).
pub fn default_slab_multiplier(dim: usize) -> f64 {
    match dim {
        0..=2 => 25.0,
        3 => 15.0,
        _ => 10.0,
    }
}

/// ζ₀ such that the 99% quantile of IG(ν₀/2, ζ₀/2) equals `sd`, by bisection
/// on [1e-8, 1e8] to relative tolerance 1e-6. The CDF at fixed `sd` is
/// decreasing in ζ₀. When no root lies in the bracket the nearer end is
/// returned with a warning.
fn solve_zeta0(nu0: f64, sd: f64) -> f64 {
    const LO: f64 = 1e-8;
    const HI: f64 = 1e8;
    let shape = nu0 / 2.0;
    let cdf = |zeta: f64| stats::inverse_gamma_cdf(sd, shape, zeta / 2.0);
    let target = 0.99;
    if cdf(LO) <= target {
        log::warn!("ζ₀ target sd={sd} unreachable from below; clamping ζ₀ to {LO}");
        return LO;
    }
    if cdf(HI) >= target {
        log::warn!("ζ₀ target sd={sd} unreachable from above; clamping ζ₀ to {HI}");
        return HI;
    }
    let (mut lo, mut hi) = (LO, HI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-6 * mid {
            return mid;
        }
        if cdf(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Data-derived hyperparameter defaults:
/// σ_μ² = 0.001, a_s = 2, b_s = 0, σ_s² = 0.5, p_i = 0.5, ν₀ = 2,
/// τ_i = Δy/(3Δx) with Δx the largest per-dimension coordinate range of X
/// and Δy = sd(y)/5, ζ₀ matching the 99% prior quantile of σ² to sd(y), and
/// C from [`default_slab_multiplier`] unless overridden.
pub fn default_hyperparams(xs: &[Point], y: &[f64], c_slab: Option<f64>) -> Result<HyperParams> {
    let n = xs.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidConfig(format!(
            "hyperparameter defaults need at least 2 points with responses, got {n} points / {} responses",
            y.len()
        )));
    }
    let dim = xs[0].len();
    let mut dx: f64 = 0.0;
    for j in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            lo = lo.min(x[j]);
            hi = hi.max(x[j]);
        }
        dx = dx.max(hi - lo);
    }
    if dx <= 0.0 {
        return Err(Error::InvalidConfig(
            "explored points are identical in every dimension".into(),
        ));
    }
    let var_y = stats::sample_variance(y);
    let sd_y = var_y.sqrt();
    let mut tau = sd_y / 5.0 / (3.0 * dx);
    if tau < 1e-6 {
        log::warn!("degenerate responses (Var(y) ≈ 0); flooring spike scale τ at 1e-6");
        tau = 1e-6;
    }
    Ok(HyperParams {
        c_slab: c_slab.unwrap_or_else(|| default_slab_multiplier(dim)),
        tau: vec![tau; n],
        p_spike: 0.5,
        a_s: 2.0,
        b_s: 0.0,
        nu0: 2.0,
        zeta0: solve_zeta0(2.0, sd_y),
        sigma2_mu: 0.001,
        sigma2_s: 0.5,
        omega_mix: 0.1,
    })
}

/// Smallest axis-aligned box covering the explored points. It only ever
/// grows as points are appended.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaBox {
    bounds: Vec<(f64, f64)>,
}

impl OmegaBox {
    pub fn from_points(points: &[Point]) -> OmegaBox {
        assert!(!points.is_empty(), "covering box of no points");
        let dim = points[0].len();
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for p in points {
            for j in 0..dim {
                bounds[j].0 = bounds[j].0.min(p[j]);
                bounds[j].1 = bounds[j].1.max(p[j]);
            }
        }
        OmegaBox { bounds }
    }

    /// Grow the box to cover one more point.
    pub fn extend(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.bounds.len());
        for (b, v) in self.bounds.iter_mut().zip(x) {
            b.0 = b.0.min(*v);
            b.1 = b.1.max(*v);
        }
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Point {
        self.bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { lo + rng.gen::<f64>() * (hi - lo) } else { lo })
            .collect()
    }
}

/// Whether the scale move updates one shared s or each s_i separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SUpdateMode {
    Shared,
    PerBasis,
}

/// Chain length, burn-in, thinning, and which MH moves run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Total sweeps K.
    pub iters: usize,
    /// Fraction of sweeps discarded as burn-in.
    pub burn_frac: f64,
    /// Thinning stride over post-burn-in sweeps.
    pub thin: usize,
    /// Update the centers μ_i by MH (off in the default fixed-center mode).
    pub update_mu: bool,
    pub update_s: SUpdateMode,
    /// Initial scale for every basis (e.g. a leave-one-out choice from the
    /// initial design).
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> ChainConfig {
        ChainConfig {
            iters: 10_000,
            burn_frac: 0.40,
            thin: 5,
            update_mu: false,
            update_s: SUpdateMode::Shared,
            init_scale: 1.0,
            seed: 0,
        }
    }
}

impl ChainConfig {
    /// Number of leading sweeps discarded.
    pub fn burn(&self) -> usize {
        (self.iters as f64 * self.burn_frac).round() as usize
    }

    /// Number of retained states: sweeps burn+thin, burn+2·thin, ... ≤ K.
    pub fn retained(&self) -> usize {
        (self.iters - self.burn()) / self.thin
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::InvalidConfig("chain needs at least one sweep".into()));
        }
        if !(0.0..1.0).contains(&self.burn_frac) {
            return Err(Error::InvalidConfig(format!(
                "burn_frac must lie in [0,1), got {}",
                self.burn_frac
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thinning stride must be ≥ 1".into()));
        }
        if self.retained() == 0 {
            return Err(Error::InvalidConfig(format!(
                "no retained states: K={}, burn={}, thin={}",
                self.iters,
                self.burn(),
                self.thin
            )));
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "initial scale must be positive, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Factored posterior for β | (everything else): N(h, M) with
/// M = (D'D/σ² + Σ_τ⁻²)⁻¹ and h = M·D'y/σ², held as the Cholesky factor of
/// the precision so draws cost one triangular solve.
pub struct GibbsCache {
    l: DMatrix<f64>,
    h: DVector<f64>,
}

impl GibbsCache {
    /// Build from precomputed normal-equation blocks D'D and D'y.
    pub fn from_normal_equations(
        dtd: &DMatrix<f64>,
        dty: &DVector<f64>,
        sigma2: f64,
        sigma_tau: &[f64],
    ) -> Result<GibbsCache> {
        let n = dtd.nrows();
        debug_assert!(sigma2 > 0.0);
        debug_assert_eq!(sigma_tau.len(), n);
        let mut a = dtd / sigma2;
        for i in 0..n {
            a[(i, i)] += 1.0 / (sigma_tau[i] * sigma_tau[i]);
        }
        let chol = match Cholesky::new(a.clone()) {
            Some(c) => c,
            None => {
                for i in 0..n {
                    a[(i, i)] += 1e-10;
                }
                Cholesky::new(a).ok_or_else(|| {
                    Error::SingularSystem(
                        "posterior precision is not positive definite even after jitter".into(),
                    )
                })?
            }
        };
        let h = chol.solve(&(dty / sigma2));
        Ok(GibbsCache { l: chol.l(), h })
    }

    pub fn new(
        d: &DMatrix<f64>,
        y_centered: &DVector<f64>,
        sigma2: f64,
        sigma_tau: &[f64],
    ) -> Result<GibbsCache> {
        GibbsCache::from_normal_equations(&d.tr_mul(d), &d.tr_mul(y_centered), sigma2, sigma_tau)
    }

    /// One draw β = h + L⁻ᵀz with z standard normal.
    pub fn draw(&self, rng: &mut impl Rng) -> DVector<f64> {
        let n = self.h.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = self
            .l
            .tr_solve_lower_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        &self.h + x
    }

    pub fn posterior_mean(&self) -> &DVector<f64> {
        &self.h
    }

    /// M = (LL')⁻¹, materialized for calibration checks.
    pub fn posterior_cov(&self) -> DMatrix<f64> {
        let n = self.h.len();
        let eye = DMatrix::identity(n, n);
        let y = self
            .l
            .solve_lower_triangular(&eye)
            .expect("Cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }
}

/// One conjugate draw of β from N(h, M); see [`GibbsCache`]. Σ_τ is the
/// diagonal of prior standard deviations a_i·τ_i.
pub fn sample_beta(
    d: &DMatrix<f64>,
    y_centered: &[f64],
    sigma2: f64,
    sigma_tau: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let y = DVector::from_column_slice(y_centered);
    let cache = GibbsCache::new(d, &y, sigma2, sigma_tau)?;
    Ok(cache.draw(rng).as_slice().to_vec())
}

/// One conjugate draw of σ² from IG((ν₀+N)/2, (ζ₀+RSS)/2).
pub fn sample_sigma2(residual_ss: f64, n: usize, nu0: f64, zeta0: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(residual_ss >= 0.0);
    let shape = 0.5 * (nu0 + n as f64);
    let rate = 0.5 * (zeta0 + residual_ss);
    let gamma = Gamma::new(shape, 1.0 / rate).expect("positive shape and scale");
    1.0 / gamma.sample(rng)
}

/// P(γ_i = 1 | β_i): the slab density times (1−p_i) against the spike
/// density times p_i, computed through log densities.
pub fn slab_probability(i: usize, beta: &[f64], hp: &HyperParams) -> f64 {
    let b = beta[i];
    let log_p1 = (1.0 - hp.p_spike).ln() + stats::normal_logpdf(b, 0.0, hp.c_slab * hp.tau[i]);
    let log_p0 = hp.p_spike.ln() + stats::normal_logpdf(b, 0.0, hp.tau[i]);
    1.0 / (1.0 + (log_p0 - log_p1).exp())
}

/// One draw of the indicator γ_i given the current β.
pub fn sample_gamma_indicator(i: usize, beta: &[f64], hp: &HyperParams, rng: &mut impl Rng) -> u8 {
    u8::from(rng.gen::<f64>() < slab_probability(i, beta, hp))
}

/// Acceptance probability for a center move: min{1, exp(−(RSS*−RSS)/(2σ²))}.
/// The domain indicator is applied by the caller before proposing the draw.
pub fn mu_accept_prob(rss_star: f64, rss: f64, sigma2: f64) -> f64 {
    (-(rss_star - rss) / (2.0 * sigma2)).min(0.0).exp()
}

/// Acceptance probability for a scale move: the likelihood ratio times the
/// prior kernel ratio (s*/s)^{a_s−1} e^{−b_s(s*−s)}; zero for s* ≤ 0.
pub fn s_accept_prob(
    rss_star: f64,
    rss: f64,
    sigma2: f64,
    s_star: f64,
    s: f64,
    a_s: f64,
    b_s: f64,
) -> f64 {
    if s_star <= 0.0 {
        return 0.0;
    }
    let log_ratio =
        -(rss_star - rss) / (2.0 * sigma2) + (a_s - 1.0) * (s_star / s).ln() - b_s * (s_star - s);
    log_ratio.min(0.0).exp()
}

fn rss_of(d: &DMatrix<f64>, beta: &DVector<f64>, y_c: &DVector<f64>) -> f64 {
    (y_c - d * beta).norm_squared()
}

/// MH move for one center μ_i: propose from the ω-mixture of Uniform(Ω) and
/// N(μ_i, σ_μ²·I), reject outside Ω, otherwise accept by [`mu_accept_prob`].
/// Returns whether the move was accepted.
pub fn mh_update_mu(
    i: usize,
    state: &mut SurrogateState,
    omega_box: &OmegaBox,
    hp: &HyperParams,
    xs: &[Point],
    y_centered: &[f64],
    rng: &mut impl Rng,
) -> bool {
    let proposal: Point = if rng.gen::<f64>() < hp.omega_mix {
        omega_box.sample_uniform(rng)
    } else {
        let sd = hp.sigma2_mu.sqrt();
        state.bases[i]
            .center
            .iter()
            .map(|c| c + sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    if !omega_box.contains(&proposal) {
        return false;
    }
    let y_c = DVector::from_column_slice(y_centered);
    let beta = DVector::from_column_slice(&state.beta);
    let d = design_matrix(xs, &state.bases);
    let rss = rss_of(&d, &beta, &y_c);
    let mut bases_star = state.bases.clone();
    bases_star[i].center = proposal;
    let rss_star = rss_of(&design_matrix(xs, &bases_star), &beta, &y_c);
    if rng.gen::<f64>() < mu_accept_prob(rss_star, rss, state.sigma2) {
        state.bases = bases_star;
        true
    } else {
        false
    }
}

/// MH move for one scale s_i: propose N(s_i, σ_s²), reject non-positive
/// proposals, otherwise accept by [`s_accept_prob`].
pub fn mh_update_s(
    i: usize,
    state: &mut SurrogateState,
    hp: &HyperParams,
    xs: &[Point],
    y_centered: &[f64],
    rng: &mut impl Rng,
) -> bool {
    let s = state.bases[i].scale;
    let s_star = s + hp.sigma2_s.sqrt() * rng.sample::<f64, _>(StandardNormal);
    if s_star <= 0.0 {
        return false;
    }
    let y_c = DVector::from_column_slice(y_centered);
    let beta = DVector::from_column_slice(&state.beta);
    let d = design_matrix(xs, &state.bases);
    let rss = rss_of(&d, &beta, &y_c);
    let mut bases_star = state.bases.clone();
    bases_star[i].scale = s_star;
    let rss_star = rss_of(&design_matrix(xs, &bases_star), &beta, &y_c);
    if rng.gen::<f64>() < s_accept_prob(rss_star, rss, state.sigma2, s_star, s, hp.a_s, hp.b_s) {
        state.bases = bases_star;
        true
    } else {
        false
    }
}

/// MH move for one shared scale applied to every basis at once, with the
/// same single prior kernel as the per-basis move.
pub fn mh_update_s_shared(
    state: &mut SurrogateState,
    hp: &HyperParams,
    xs: &[Point],
    y_centered: &[f64],
    rng: &mut impl Rng,
) -> bool {
    let s = state.bases[0].scale;
    let s_star = s + hp.sigma2_s.sqrt() * rng.sample::<f64, _>(StandardNormal);
    if s_star <= 0.0 {
        return false;
    }
    let y_c = DVector::from_column_slice(y_centered);
    let beta = DVector::from_column_slice(&state.beta);
    let d = design_matrix(xs, &state.bases);
    let rss = rss_of(&d, &beta, &y_c);
    let mut bases_star = state.bases.clone();
    for b in &mut bases_star {
        b.scale = s_star;
    }
    let rss_star = rss_of(&design_matrix(xs, &bases_star), &beta, &y_c);
    if rng.gen::<f64>() < s_accept_prob(rss_star, rss, state.sigma2, s_star, s, hp.a_s, hp.b_s) {
        state.bases = bases_star;
        true
    } else {
        false
    }
}

/// Acceptance rates and the per-sweep residual sum of squares.
#[derive(Debug, Clone)]
pub struct ChainDiagnostics {
    /// Fraction of center proposals accepted; None when update_mu is off.
    pub accept_mu: Option<f64>,
    /// Fraction of scale proposals accepted.
    pub accept_s: Option<f64>,
    /// RSS after the β draw of each sweep.
    pub rss_trace: Vec<f64>,
}

/// Write diagnostics in long CSV format (`metric,index,value`).
pub fn export_diagnostics(path: impl AsRef<Path>, diag: &ChainDiagnostics) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("metric,index,value\n");
    if let Some(r) = diag.accept_mu {
        out.push_str(&format!("accept_mu,0,{r}\n"));
    }
    if let Some(r) = diag.accept_s {
        out.push_str(&format!("accept_s,0,{r}\n"));
    }
    for (k, rss) in diag.rss_trace.iter().enumerate() {
        out.push_str(&format!("rss,{},{rss}\n", k + 1));
    }
    std::fs::write(path, out).map_err(Error::io(path))
}

/// Run one chain and return the retained posterior states.
pub fn run_chain(
    xs: &[Point],
    y: &[f64],
    hp: &HyperParams,
    cfg: &ChainConfig,
) -> Result<PosteriorEnsemble> {
    run_chain_with_diagnostics(xs, y, hp, cfg).map(|(ensemble, _)| ensemble)
}

/// [`run_chain`] plus acceptance rates and the RSS trace.
pub fn run_chain_with_diagnostics(
    xs: &[Point],
    y: &[f64],
    hp: &HyperParams,
    cfg: &ChainConfig,
) -> Result<(PosteriorEnsemble, ChainDiagnostics)> {
    let n = xs.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidConfig(format!(
            "chain needs at least 2 explored points with responses, got {n} points / {} responses",
            y.len()
        )));
    }
    cfg.validate()?;
    hp.validate(n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let y_mean = stats::mean(y);
    let y_c = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let omega = OmegaBox::from_points(xs);

    let mut bases: Vec<RbfBasis> = xs
        .iter()
        .map(|x| RbfBasis::new(x.clone(), cfg.init_scale))
        .collect();
    let mut gamma = vec![1u8; n];
    let mut sigma2 = stats::sample_variance(y).max(1e-12);

    let mut d = design_matrix(xs, &bases);
    let mut dtd = d.tr_mul(&d);
    let mut dty = d.tr_mul(&y_c);
    let mut d_dirty = false;

    let burn = cfg.burn();
    let mut states = Vec::with_capacity(cfg.retained());
    let mut rss_trace = Vec::with_capacity(cfg.iters);
    let (mut mu_tries, mut mu_accepts) = (0u64, 0u64);
    let (mut s_tries, mut s_accepts) = (0u64, 0u64);
    let sd_mu = hp.sigma2_mu.sqrt();
    let sd_s = hp.sigma2_s.sqrt();

    for sweep in 1..=cfg.iters {
        if d_dirty {
            dtd = d.tr_mul(&d);
            dty = d.tr_mul(&y_c);
            d_dirty = false;
        }

        // β | rest
        let sigma_tau: Vec<f64> = gamma
            .iter()
            .zip(&hp.tau)
            .map(|(&g, &t)| if g == 1 { hp.c_slab * t } else { t })
            .collect();
        let cache = GibbsCache::from_normal_equations(&dtd, &dty, sigma2, &sigma_tau)?;
        let beta = cache.draw(&mut rng);

        let mut fitted = &d * &beta;
        let mut rss = (&y_c - &fitted).norm_squared();

        // σ² | rest
        sigma2 = sample_sigma2(rss, n, hp.nu0, hp.zeta0, &mut rng);

        // γ_i | rest, sequentially
        for i in 0..n {
            gamma[i] = sample_gamma_indicator(i, beta.as_slice(), hp, &mut rng);
        }

        // μ_i | rest (optional), one column of D changes per accepted move
        if cfg.update_mu {
            for i in 0..n {
                mu_tries += 1;
                let proposal: Point = if rng.gen::<f64>() < hp.omega_mix {
                    omega.sample_uniform(&mut rng)
                } else {
                    bases[i]
                        .center
                        .iter()
                        .map(|c| c + sd_mu * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                };
                if !omega.contains(&proposal) {
                    continue;
                }
                let trial = RbfBasis::new(proposal, bases[i].scale);
                let new_col: Vec<f64> = xs.iter().map(|x| rbf_eval(x, &trial)).collect();
                let b_i = beta[i];
                let mut rss_star = 0.0;
                for k in 0..n {
                    let f = fitted[k] + (new_col[k] - d[(k, i)]) * b_i;
                    rss_star += (y_c[k] - f) * (y_c[k] - f);
                }
                if rng.gen::<f64>() < mu_accept_prob(rss_star, rss, sigma2) {
                    for k in 0..n {
                        fitted[k] += (new_col[k] - d[(k, i)]) * b_i;
                        d[(k, i)] = new_col[k];
                    }
                    bases[i] = trial;
                    rss = rss_star;
                    d_dirty = true;
                    mu_accepts += 1;
                }
            }
        }

        // s | rest: one shared move, or one move per basis
        match cfg.update_s {
            SUpdateMode::Shared => {
                s_tries += 1;
                let s = bases[0].scale;
                let s_star = s + sd_s * rng.sample::<f64, _>(StandardNormal);
                if s_star > 0.0 {
                    let mut bases_star = bases.clone();
                    for b in &mut bases_star {
                        b.scale = s_star;
                    }
                    let d_star = design_matrix(xs, &bases_star);
                    let fitted_star = &d_star * &beta;
                    let rss_star = (&y_c - &fitted_star).norm_squared();
                    let prob = s_accept_prob(rss_star, rss, sigma2, s_star, s, hp.a_s, hp.b_s);
                    if rng.gen::<f64>() < prob {
                        bases = bases_star;
                        d = d_star;
                        fitted = fitted_star;
                        rss = rss_star;
                        d_dirty = true;
                        s_accepts += 1;
                    }
                }
            }
            SUpdateMode::PerBasis => {
                for i in 0..n {
                    s_tries += 1;
                    let s = bases[i].scale;
                    let s_star = s + sd_s * rng.sample::<f64, _>(StandardNormal);
                    if s_star <= 0.0 {
                        continue;
                    }
                    let trial = RbfBasis::new(bases[i].center.clone(), s_star);
                    let new_col: Vec<f64> = xs.iter().map(|x| rbf_eval(x, &trial)).collect();
                    let b_i = beta[i];
                    let mut rss_star = 0.0;
                    for k in 0..n {
                        let f = fitted[k] + (new_col[k] - d[(k, i)]) * b_i;
                        rss_star += (y_c[k] - f) * (y_c[k] - f);
                    }
                    let prob = s_accept_prob(rss_star, rss, sigma2, s_star, s, hp.a_s, hp.b_s);
                    if rng.gen::<f64>() < prob {
                        for k in 0..n {
                            fitted[k] += (new_col[k] - d[(k, i)]) * b_i;
                            d[(k, i)] = new_col[k];
                        }
                        bases[i] = trial;
                        rss = rss_star;
                        d_dirty = true;
                        s_accepts += 1;
                    }
                }
            }
        }

        rss_trace.push(rss);
        if sweep > burn && (sweep - burn) % cfg.thin == 0 {
            let state = SurrogateState {
                beta: beta.as_slice().to_vec(),
                gamma: gamma.clone(),
                sigma2,
                bases: bases.clone(),
            };
            state.check();
            states.push(state);
        }
    }

    let diagnostics = ChainDiagnostics {
        accept_mu: (mu_tries > 0).then(|| mu_accepts as f64 / mu_tries as f64),
        accept_s: (s_tries > 0).then(|| s_accepts as f64 / s_tries as f64),
        rss_trace,
    };
    Ok((PosteriorEnsemble { states, y_mean }, diagnostics))
}
