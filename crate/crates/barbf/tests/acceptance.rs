//! Release acceptance suite. One test per criterion; each ends by printing an
//! `ACCEPTANCE PASS` line so the captured output doubles as a checklist, and
//! the libtest pass/fail line per `criterion_*` test is the machine-readable
//! verdict.
//!
//! Criteria 5-7 and 10 are desk-scale statistical reproductions (reduced
//! replication counts and chain lengths) under fixed base seeds, so they are
//! deterministic in practice but take minutes, not seconds. The full-scale
//! experiment settings live in `configs/` and are run by hand, not here.

use barbf::acquisition::{ei_gaussian, maximin_distance_point, update_escape, EscapeState};
use barbf::baselines::{choose_scale_loo, default_scale_grid, gmsrbf_fit, gmsrbf_select, WeightCycle};
use barbf::design::maximin_lhd;
use barbf::harness::{derive_seed, replicate};
use barbf::mcmc::{sample_gamma_indicator, sample_sigma2, GibbsCache, HyperParams};
use barbf::optimizer::{run_on_problem, run_optimization, Method, RunConfig, SelectionKind};
use barbf::rbf::{design_matrix, RbfBasis};
use barbf::testbed::{make_grid, scan_problem, Region, TestProblem, MAXIMIZER_TOL};
use barbf::Point;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma_ur;

/// Base seed shared by the stochastic reproduction tests.
const BASE_SEED: u64 = 0;

fn pass(name: &str) {
    println!("ACCEPTANCE PASS: {name}");
}

fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, want {expected} ± {tol}"
    );
}

/// Reference grid optima: value, location of the first maximizer, and the
/// number of grid points tied within 1e-4 of the maximum.
#[test]
fn criterion_01_grid_ground_truth() {
    let branin = TestProblem::by_name("branin").unwrap();
    let scan = scan_problem(&branin, None, MAXIMIZER_TOL).unwrap();
    assert_close(scan.max_value, 1.0473, 5e-5, "branin grid max");
    assert_close(scan.argmax[0], 0.96, 1e-9, "branin argmax x1");
    assert_close(scan.argmax[1], 0.16, 1e-9, "branin argmax x2");

    let ronk2 = TestProblem::by_name("ronkkonen2").unwrap();
    let scan2 = scan_problem(&ronk2, None, MAXIMIZER_TOL).unwrap();
    assert_close(scan2.max_value, 0.4777, 5e-5, "ronkkonen2 grid max");
    assert_eq!(scan2.maximizers.len(), 4, "ronkkonen2 maximizer count");

    let ronk3 = TestProblem::by_name("ronkkonen3").unwrap();
    let scan3 = scan_problem(&ronk3, None, MAXIMIZER_TOL).unwrap();
    assert_close(scan3.max_value, 0.3584, 5e-5, "ronkkonen3 grid max");
    for (i, want) in [0.32, 0.68, 0.44].iter().enumerate() {
        assert_close(scan3.argmax[i], *want, 1e-9, "ronkkonen3 argmax");
    }

    let hart4 = TestProblem::by_name("hartmann4").unwrap();
    let scan4 = scan_problem(&hart4, None, MAXIMIZER_TOL).unwrap();
    assert_close(scan4.max_value, 3.1218, 5e-5, "hartmann4 grid max");

    let rast8 = TestProblem::by_name("rastrigin:8").unwrap();
    assert_eq!(rast8.eval(&[0.5; 8]).unwrap(), 0.0, "rastrigin center value");

    pass("grid ground truth (branin / ronkkonen 2d+3d / hartmann4 / rastrigin)");
}

/// The three conditional samplers against their analytic laws: β draws match
/// the Gaussian mean/covariance within 4 Monte Carlo standard errors, σ²
/// passes a Kolmogorov-Smirnov test against the inverse gamma at level 0.001,
/// and the indicator probability at β_i = 0 equals 1/(1+C) within 3 binomial
/// standard errors. 10⁵ draws each.
#[test]
fn criterion_02_sampler_calibration() {
    let n_draws = 100_000usize;
    let nf = n_draws as f64;

    // β | rest on a small fixed instance.
    let centers: Vec<Point> = [0.05, 0.30, 0.50, 0.70, 0.95]
        .iter()
        .map(|&v| vec![v])
        .collect();
    let bases: Vec<RbfBasis> = centers
        .iter()
        .map(|c| RbfBasis::new(c.clone(), 2.0))
        .collect();
    let d = design_matrix(&centers, &bases);
    let y = [0.3, -0.2, 0.9, 0.4, -0.5];
    let y_bar = y.iter().sum::<f64>() / y.len() as f64;
    let y_centered = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_bar));
    let sigma_tau = [1.5, 1.0, 2.0, 0.8, 1.2];
    let cache = GibbsCache::new(&d, &y_centered, 0.25, &sigma_tau).unwrap();
    let h = cache.posterior_mean().clone();
    let m = cache.posterior_cov();
    let k = h.len();

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut sum = DVector::<f64>::zeros(k);
    let mut cross = DMatrix::<f64>::zeros(k, k);
    for _ in 0..n_draws {
        let b = cache.draw(&mut rng);
        sum += &b;
        cross += &b * b.transpose();
    }
    let mean_hat = &sum / nf;
    let cov_hat = cross / nf - &mean_hat * mean_hat.transpose();
    for i in 0..k {
        let se = (m[(i, i)] / nf).sqrt();
        assert_close(mean_hat[i], h[i], 4.0 * se, "beta posterior mean");
        for j in 0..k {
            // Var of a Gaussian sample covariance entry: (M_ii M_jj + M_ij²)/n.
            let se_cov = ((m[(i, i)] * m[(j, j)] + m[(i, j)] * m[(i, j)]) / nf).sqrt();
            assert_close(cov_hat[(i, j)], m[(i, j)], 4.0 * se_cov, "beta posterior cov");
        }
    }

    // σ² | rest against its inverse gamma: shape (ν₀+N)/2, rate (ζ₀+RSS)/2.
    let (rss, n_obs, nu0, zeta0) = (1.3, 5usize, 2.0, 0.02);
    let shape = (nu0 + n_obs as f64) / 2.0;
    let rate = (zeta0 + rss) / 2.0;
    let mut draws: Vec<f64> = (0..n_draws)
        .map(|_| sample_sigma2(rss, n_obs, nu0, zeta0, &mut rng))
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // X ~ InvGamma(a, b)  ⇔  1/X ~ Gamma(a, rate b), so F(x) = Q(a, b/x).
    let cdf = |x: f64| gamma_ur(shape, rate / x);
    let mut ks = 0.0f64;
    for (i, x) in draws.iter().enumerate() {
        let f = cdf(*x);
        ks = ks.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    // Asymptotic Kolmogorov critical value at α = 0.001: √(ln(2/α)/2) / √n.
    let ks_crit = 1.949_474_603_520_405_1 / nf.sqrt();
    assert!(ks < ks_crit, "sigma2 KS statistic {ks} ≥ critical {ks_crit}");

    // γ_i | β_i = 0: slab probability is 1/(1+C) regardless of τ.
    let hp = HyperParams {
        c_slab: 25.0,
        tau: vec![0.5],
        p_spike: 0.5,
        a_s: 2.0,
        b_s: 0.0,
        nu0: 2.0,
        zeta0: 0.02,
        sigma2_mu: 0.001,
        sigma2_s: 0.5,
        omega_mix: 0.1,
    };
    let q = 1.0 / 26.0;
    let ones: usize = (0..n_draws)
        .map(|_| sample_gamma_indicator(0, &[0.0], &hp, &mut rng) as usize)
        .sum();
    let se = (q * (1.0 - q) / nf).sqrt();
    assert_close(ones as f64 / nf, q, 3.0 * se, "indicator slab rate at beta = 0");

    pass("sampler calibration (beta 4se / sigma2 KS 0.001 / indicator 3se)");
}

/// Closed-form expected improvement against a 10⁶-draw Monte Carlo estimate
/// on 20 random (μ, s₀, f_max) triples, within 3 Monte Carlo standard errors
/// each (plus a hair of absolute slack for triples deep in the zero tail).
#[test]
fn criterion_03_ei_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n_draws = 1_000_000usize;
    let nf = n_draws as f64;
    for trial in 0..20 {
        let mu = rng.gen_range(-3.0..3.0);
        let s0 = rng.gen_range(0.1..2.0);
        let f_max = rng.gen_range(-3.0..3.0);
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        for _ in 0..n_draws {
            let z: f64 = rng.sample(StandardNormal);
            let imp = (mu + s0 * z - f_max).max(0.0);
            acc += imp;
            acc_sq += imp * imp;
        }
        let mc = acc / nf;
        let var = (acc_sq / nf - mc * mc).max(0.0);
        let se = (var / nf).sqrt();
        let ei = ei_gaussian(mu, s0, f_max);
        assert!(
            (ei - mc).abs() <= 3.0 * se + 1e-12,
            "trial {trial}: ei {ei} vs mc {mc} ± {se} (mu {mu}, s0 {s0}, f_max {f_max})"
        );
    }
    pass("expected improvement matches Monte Carlo (20 triples, 3se)");
}

/// Interpolating-surrogate invariants: exact fit at the training points, the
/// exact weight cycle, and pure-distance selection (ω = 1) agreeing with the
/// brute-force maximin candidate.
#[test]
fn criterion_04_interpolating_baseline_invariants() {
    // A multimodal surface at the initial-design size the runs actually use:
    // the leave-one-out choice lands on a narrow kernel, so the system is
    // well conditioned and exact interpolation is attainable in f64. (On very
    // smooth surfaces the choice can hit the flat end of the scale grid,
    // where no double-precision coefficient vector interpolates to 1e-6 —
    // that is a property of the arithmetic, not of the fit.)
    let problem = TestProblem::by_name("ronkkonen2").unwrap();
    let xs = maximin_lhd(16, 2, 3);
    let y: Vec<f64> = xs.iter().map(|x| problem.eval(x).unwrap()).collect();
    let s = choose_scale_loo(&xs, &y, &default_scale_grid()).unwrap();
    let model = gmsrbf_fit(&xs, &y, s).unwrap();
    for (x, yi) in xs.iter().zip(&y) {
        let err = (model.predict(x) - yi).abs();
        assert!(
            err <= 1e-6 * yi.abs().max(1.0),
            "interpolation error {err} at {x:?}"
        );
    }

    let mut cycle = WeightCycle::new();
    let seen: Vec<f64> = (0..10).map(|_| cycle.advance()).collect();
    let want = [1.0, 0.8, 0.6, 0.4, 0.2, 1.0, 0.8, 0.6, 0.4, 0.2];
    assert_eq!(seen, want, "weight cycle sequence");

    // A fresh cycle starts at ω = 1: selection must reduce to maximin.
    let grid = make_grid(problem.region(), 0.2).unwrap();
    let mut fresh = WeightCycle::new();
    let (picked, omega) = gmsrbf_select(grid.points(), &model, &xs, &mut fresh).unwrap();
    assert_eq!(omega, 1.0);
    let maximin = maximin_distance_point(grid.points(), &xs).unwrap();
    assert_eq!(picked, maximin, "omega = 1 selection vs brute-force maximin");

    pass("interpolating baseline (fit 1e-6 / cycle exact / omega=1 = maximin)");
}

/// Desk-scale reproduction of the two-dimensional bowl-shaped benchmark with
/// the sampled surrogate: 20 replications, 16 → 46 evaluations, 2,000-sweep
/// chains, slab multiplier 25. Mean best ≥ 1.030 and ≥ 20% of replications
/// end within 1e-4 of the grid optimum.
#[test]
fn criterion_05_branin_desk_scale() {
    let mut cfg = RunConfig::for_problem("branin", Method::Barbf).unwrap();
    assert_eq!((cfg.n_min, cfg.n_max), (16, 46));
    cfg.chain.iters = 2_000;
    cfg.hyper.c_slab = Some(25.0);
    let (summary, _) = replicate(&cfg, 20, BASE_SEED).unwrap();
    assert!(summary.failures.is_empty(), "failed replications: {:?}", summary.failures);
    assert!(
        summary.mean >= 1.030,
        "mean best {} below 1.030",
        summary.mean
    );
    let hits = summary.hits.expect("grid-restricted run has a reference optimum");
    assert!(hits * 5 >= 20, "hit count {hits}/20 below 20%");
    pass(&format!(
        "branin desk scale (mean {:.4} ≥ 1.030, hits {hits}/20 ≥ 4)",
        summary.mean
    ));
}

/// The Gaussian-process baseline nearly always finds the grid optimum on the
/// same budget: ≥ 80% hits over 20 replications.
#[test]
fn criterion_06_ego_branin_hit_rate() {
    let cfg = RunConfig::for_problem("branin", Method::Ego).unwrap();
    let (summary, _) = replicate(&cfg, 20, BASE_SEED).unwrap();
    assert!(summary.failures.is_empty(), "failed replications: {:?}", summary.failures);
    let hits = summary.hits.expect("grid-restricted run has a reference optimum");
    assert!(hits * 5 >= 80, "hit count {hits}/20 below 80%");
    pass(&format!("ego on branin (hits {hits}/20 ≥ 16)"));
}

/// Method ordering on the multimodal 2-d benchmark: the sampled surrogate
/// hits the grid optimum strictly more often than the interpolating baseline
/// over 20 replications each, with mean best ≥ 0.46.
#[test]
fn criterion_07_ronkkonen_ordering() {
    let mut cfg_b = RunConfig::for_problem("ronkkonen2", Method::Barbf).unwrap();
    cfg_b.chain.iters = 2_000;
    let (sum_b, _) = replicate(&cfg_b, 20, BASE_SEED).unwrap();
    assert!(sum_b.failures.is_empty(), "failed replications: {:?}", sum_b.failures);

    let cfg_g = RunConfig::for_problem("ronkkonen2", Method::Gmsrbf).unwrap();
    let (sum_g, _) = replicate(&cfg_g, 20, BASE_SEED).unwrap();
    assert!(sum_g.failures.is_empty(), "failed replications: {:?}", sum_g.failures);

    let hits_b = sum_b.hits.unwrap();
    let hits_g = sum_g.hits.unwrap();
    assert!(
        hits_b > hits_g,
        "sampled surrogate hits {hits_b} not above interpolating baseline {hits_g}"
    );
    assert!(
        sum_b.mean >= 0.46,
        "sampled-surrogate mean best {} below 0.46",
        sum_b.mean
    );
    pass(&format!(
        "ronkkonen ordering (hits {hits_b} > {hits_g}, mean {:.4} ≥ 0.46)",
        sum_b.mean
    ));
}

/// Universal run invariants, checked for every method on one small problem:
/// exact budget, monotone best-so-far that equals the running maximum, no
/// repeated evaluations, and bit-identical traces when rerun on one seed.
#[test]
fn criterion_08_universal_run_invariants() {
    for &method in Method::all().iter() {
        let mut cfg = RunConfig::for_problem("branin", method).unwrap();
        cfg.n_min = 8;
        cfg.n_max = 14;
        cfg.grid_step = Some(0.1);
        cfg.candidate_count = 300;
        cfg.chain.iters = 400;
        cfg.seed = 23;
        let t1 = run_optimization(&cfg).unwrap();
        let t2 = run_optimization(&cfg).unwrap();

        assert_eq!(t1.len(), cfg.n_max, "{method}: budget");
        let mut running = f64::NEG_INFINITY;
        for (v, b) in t1.values.iter().zip(&t1.best_so_far) {
            running = running.max(*v);
            assert_eq!(running.to_bits(), b.to_bits(), "{method}: best-so-far");
        }
        let keys: std::collections::HashSet<Vec<u64>> = t1
            .points
            .iter()
            .map(|p| p.iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(keys.len(), t1.len(), "{method}: repeated evaluation");

        assert_eq!(t1.points, t2.points, "{method}: rerun points");
        let bits = |vs: &[f64]| vs.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&t1.values), bits(&t2.values), "{method}: rerun values");
        assert_eq!(bits(&t1.best_so_far), bits(&t2.best_so_far), "{method}: rerun best");
    }
    pass("universal invariants (budget / monotone / distinct / deterministic), all methods");
}

/// Escape behavior with M_I = M_T = 3: exactly three non-improvements enter
/// escape mode, an episode adds at most three points, and any improvement
/// resets the machinery. Checked on the state machine directly and end to
/// end on a plateau objective.
#[test]
fn criterion_09_escape_step() {
    // Entering: two non-improvements are not enough, the third triggers.
    let mut es = EscapeState::new(3, 3);
    es = update_escape(es, false);
    es = update_escape(es, false);
    assert!(!es.in_escape, "escape entered after 2 non-improvements");
    es = update_escape(es, false);
    assert!(es.in_escape, "escape not entered after 3 non-improvements");

    // Episode length: at most M_T added points, then back to normal mode.
    for added in 1..=3 {
        es = update_escape(es, false);
        assert_eq!(es.in_escape, added < 3, "episode length");
    }
    assert_eq!(es.c_non, 0, "counter not reset after a full episode");

    // Improvement resets everything, mid-episode included.
    es = update_escape(es, false);
    es = update_escape(es, false);
    es = update_escape(es, false);
    assert!(es.in_escape);
    es = update_escape(es, true);
    assert_eq!(es, EscapeState::new(3, 3), "improvement must fully reset");

    // End to end: a flat objective never improves, so the adaptive phase
    // alternates three selection steps with three escape steps.
    let plateau = TestProblem::custom("plateau", Region::unit(2), |_| 0.0);
    let mut cfg = RunConfig::for_problem("branin", Method::MBarbf).unwrap();
    cfg.problem = "plateau".into();
    cfg.n_min = 4;
    cfg.n_max = 16;
    cfg.grid_step = Some(0.2);
    cfg.chain.iters = 300;
    cfg.seed = 5;
    let trace = run_on_problem(&cfg, &plateau).unwrap();
    let kinds: Vec<SelectionKind> = trace.meta[cfg.n_min..].iter().map(|m| m.kind).collect();
    let mut want = Vec::new();
    for _ in 0..2 {
        want.extend([SelectionKind::Sei; 3]);
        want.extend([SelectionKind::Escape; 3]);
    }
    assert_eq!(kinds, want, "plateau selection pattern");

    pass("escape step (trigger at 3 / episode ≤ 3 / reset on improvement)");
}

/// Grid-free smoke test on the 8-dimensional multimodal benchmark: over five
/// replications of 80 initial + 60 adaptive evaluations with 8,000 fresh
/// candidates per iteration, the mean final best improves on the mean
/// initial-design best by at least 2.0.
#[test]
fn criterion_10_grid_free_smoke() {
    let mut cfg = RunConfig::for_problem("rastrigin:8", Method::BarbfGridfree).unwrap();
    assert_eq!((cfg.n_min, cfg.n_max), (80, 140));
    assert_eq!(cfg.candidate_count, 8_000);
    cfg.chain.iters = 1_000;
    let reps = 5;
    let mut initial_mean = 0.0;
    let mut final_mean = 0.0;
    for i in 0..reps {
        cfg.seed = derive_seed(BASE_SEED, i);
        let trace = run_optimization(&cfg).unwrap();
        initial_mean += trace.best_so_far[cfg.n_min - 1] / reps as f64;
        final_mean += trace.best_so_far[cfg.n_max - 1] / reps as f64;
    }
    let gain = final_mean - initial_mean;
    assert!(
        gain >= 2.0,
        "mean improvement {gain:.3} below 2.0 (initial {initial_mean:.3}, final {final_mean:.3})"
    );
    pass(&format!(
        "grid-free smoke (mean best {initial_mean:.2} → {final_mean:.2}, gain {gain:.2} ≥ 2.0)"
    ));
}
