//! Gaussian-process comparison optimizer: constant-mean kriging with an
//! anisotropic squared-exponential correlation, lengthscales fit by profile
//! maximum likelihood, and candidates ranked by closed-form expected
//! improvement.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::acquisition::ei_gaussian;
use crate::point::{bit_key, lex_cmp, Point};
use crate::{Error, Result};

const NUGGET_START: f64 = 1e-8;
const NUGGET_MAX: f64 = 1e-4;
const LOG_LS_LO: f64 = -4.605170185988091; // ln 0.01
const LOG_LS_HI: f64 = 2.302585092994046; // ln 10
const MULTISTARTS: usize = 10;

fn correlation(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    let mut q = 0.0;
    for ((&ai, &bi), &l) in a.iter().zip(b).zip(lengthscales) {
        let d = ai - bi;
        q += d * d / (2.0 * l * l);
    }
    (-q).exp()
}

fn correlation_matrix(xs: &[Point], lengthscales: &[f64], nugget: f64) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + nugget
        } else {
            correlation(&xs[i], &xs[j], lengthscales)
        }
    })
}

struct ProfileFit {
    chol: Cholesky<f64, Dyn>,
    mean: f64,
    process_var: f64,
    loglik: f64,
}

/// Profile log-likelihood pieces for fixed lengthscales: the trend and
/// process variance have closed forms given the correlation matrix, leaving
/// −N/2·ln σ̂² − ½·ln det R to compare across lengthscales. None when the
/// correlation matrix is not positive definite at this nugget.
fn profile_fit(xs: &[Point], y: &DVector<f64>, lengthscales: &[f64], nugget: f64) -> Option<ProfileFit> {
    let n = xs.len();
    let chol = Cholesky::new(correlation_matrix(xs, lengthscales, nugget))?;
    let ones = DVector::from_element(n, 1.0);
    let r_inv_one = chol.solve(&ones);
    let r_inv_y = chol.solve(y);
    let one_r_one = ones.dot(&r_inv_one);
    let mean = ones.dot(&r_inv_y) / one_r_one;
    let resid = y - ones.scale(mean);
    let process_var = (resid.dot(&r_inv_y) - mean * resid.dot(&r_inv_one)) / n as f64;
    if !(process_var > 0.0) {
        return None;
    }
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let loglik = -0.5 * n as f64 * process_var.ln() - 0.5 * log_det;
    Some(ProfileFit {
        chol,
        mean,
        process_var,
        loglik,
    })
}

fn clamp_log_ls(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.clamp(LOG_LS_LO, LOG_LS_HI);
    }
}

/// Nelder-Mead minimization over the clamped log-lengthscale box. Plain
/// reflect/expand/contract/shrink with the textbook coefficients; good
/// enough for the ≤ 8-dimensional likelihood surfaces seen here.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let p = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    simplex.push(start.to_vec());
    for j in 0..p {
        let mut v = start.to_vec();
        v[j] += step;
        clamp_log_ls(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if values[p] - values[0] < 1e-9 {
            break;
        }
        let centroid: Vec<f64> = (0..p)
            .map(|j| simplex[..p].iter().map(|v| v[j]).sum::<f64>() / p as f64)
            .collect();
        let blend = |t: f64| -> Vec<f64> {
            let mut v: Vec<f64> = centroid
                .iter()
                .zip(&simplex[p])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_log_ls(&mut v);
            v
        };
        let reflected = blend(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = blend(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[p] = expanded;
                values[p] = fe;
            } else {
                simplex[p] = reflected;
                values[p] = fr;
            }
        } else if fr < values[p - 1] {
            simplex[p] = reflected;
            values[p] = fr;
        } else {
            let contracted = blend(-0.5);
            let fc = f(&contracted);
            if fc < values[p] {
                simplex[p] = contracted;
                values[p] = fc;
            } else {
                for i in 1..=p {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(a, b)| a + 0.5 * (b - a))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=p)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    (simplex[best].clone(), values[best])
}

/// Constant-mean Gaussian-process surrogate with anisotropic
/// squared-exponential correlation.
#[derive(Debug, Clone)]
pub struct GpModel {
    xs: Vec<Point>,
    lengthscales: Vec<f64>,
    mean: f64,
    process_var: f64,
    nugget: f64,
    r_inv_resid: DVector<f64>,
    r_inv_one: DVector<f64>,
    one_r_one: f64,
    chol: Cholesky<f64, Dyn>,
}

impl GpModel {
    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// Kriging predictive mean and standard deviation at x, with the
    /// estimated-trend variance correction; the variance is clamped at zero
    /// before the square root.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let r: DVector<f64> = DVector::from_iterator(
            self.xs.len(),
            self.xs.iter().map(|c| correlation(x, c, &self.lengthscales)),
        );
        let mean = self.mean + r.dot(&self.r_inv_resid);
        let r_inv_r = r.dot(&self.chol.solve(&r));
        let trend = 1.0 - r.dot(&self.r_inv_one);
        let var = self.process_var * (1.0 - r_inv_r + trend * trend / self.one_r_one);
        (mean, var.max(0.0).sqrt())
    }
}

fn build_model(xs: &[Point], y: &DVector<f64>, lengthscales: Vec<f64>) -> Result<GpModel> {
    let mut nugget = NUGGET_START;
    loop {
        if let Some(fit) = profile_fit(xs, y, &lengthscales, nugget) {
            let n = xs.len();
            let ones = DVector::from_element(n, 1.0);
            let resid = y - ones.scale(fit.mean);
            let r_inv_resid = fit.chol.solve(&resid);
            let r_inv_one = fit.chol.solve(&ones);
            let one_r_one = ones.dot(&r_inv_one);
            return Ok(GpModel {
                xs: xs.to_vec(),
                lengthscales,
                mean: fit.mean,
                process_var: fit.process_var,
                nugget,
                r_inv_resid,
                r_inv_one,
                one_r_one,
                chol: fit.chol,
            });
        }
        if nugget >= NUGGET_MAX {
            return Err(Error::SingularSystem(
                "GP correlation matrix not positive definite at maximum nugget".into(),
            ));
        }
        nugget *= 10.0;
    }
}

fn multistart_points(p: usize) -> Vec<Vec<f64>> {
    (0..MULTISTARTS)
        .map(|k| {
            let t = (k as f64 + 0.5) / MULTISTARTS as f64;
            vec![LOG_LS_LO + t * (LOG_LS_HI - LOG_LS_LO); p]
        })
        .collect()
}

/// Fit the GP by profile maximum likelihood over log-lengthscales in
/// [ln 0.01, ln 10]^p, using Nelder-Mead from 10 fixed starting points.
/// Fully deterministic: same data, same model.
pub fn ego_fit(xs: &[Point], y: &[f64]) -> Result<GpModel> {
    assert_eq!(xs.len(), y.len());
    if xs.len() < 2 {
        return Err(Error::InvalidConfig(
            "GP fit needs at least two observations".into(),
        ));
    }
    {
        let mut keys: Vec<Vec<u64>> = xs.iter().map(|p| bit_key(p)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(
                "duplicate points in GP training set".into(),
            ));
        }
    }
    let p = xs[0].len();
    let yv = DVector::from_column_slice(y);
    let objective = |log_ls: &[f64]| -> f64 {
        let ls: Vec<f64> = log_ls.iter().map(|v| v.exp()).collect();
        match profile_fit(xs, &yv, &ls, NUGGET_START) {
            Some(fit) => -fit.loglik,
            None => f64::INFINITY,
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in multistart_points(p) {
        let (arg, val) = nelder_mead(&objective, &start, 0.5, 200);
        if best.as_ref().map_or(true, |(_, bv)| val < *bv) {
            best = Some((arg, val));
        }
    }
    let (log_ls, _) = best.unwrap();
    let lengthscales: Vec<f64> = log_ls.iter().map(|v| v.exp()).collect();
    build_model(xs, &yv, lengthscales)
}

/// Pick the feasible candidate maximizing expected improvement under the GP;
/// ties go to the lexicographically smallest candidate.
pub fn ego_select(candidates: &[Point], gp: &GpModel, explored: &[Point], f_max: f64) -> Result<Point> {
    let explored_keys: std::collections::HashSet<Vec<u64>> =
        explored.iter().map(|p| bit_key(p)).collect();
    let mut best: Option<(&Point, f64)> = None;
    for cand in candidates {
        if explored_keys.contains(&bit_key(cand)) {
            continue;
        }
        let (mu, sd) = gp.predict(cand);
        let ei = ei_gaussian(mu, sd, f_max);
        best = match best {
            None => Some((cand, ei)),
            Some((bp, bei)) => {
                if ei > bei || (ei == bei && lex_cmp(cand, bp) == std::cmp::Ordering::Less) {
                    Some((cand, ei))
                } else {
                    Some((bp, bei))
                }
            }
        };
    }
    best.map(|(p, _)| p.clone())
        .ok_or(Error::NoFeasibleCandidates)
}
