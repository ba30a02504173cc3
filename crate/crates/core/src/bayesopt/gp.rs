//! Gaussian-process surrogate: exact inference under a Matérn 5/2 prior,
//! kernel hyper-parameters fitted by maximizing the log marginal likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{matern52_r, scaled_distance};
use super::nelder_mead;
use super::space::{Assignment, ParamSpace};
use super::BayesOptError;
use crate::seed::rng_for;
use crate::trial::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Lower bound on the noise variance, in standardized target units.
    pub noise_floor: f64,
    pub noise_max: f64,
    pub lengthscale_bounds: (f64, f64),
    pub signal_bounds: (f64, f64),
    /// Local searches from distinct starting points.
    pub starts: usize,
    /// Likelihood evaluations per start.
    pub max_evals: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            noise_floor: 1e-10,
            noise_max: 1.0,
            lengthscale_bounds: (1e-2, 10.0),
            signal_bounds: (1e-2, 1e2),
            starts: 8,
            max_evals: 200,
        }
    }
}

impl GpConfig {
    /// Hyper-parameters used when the targets carry no information.
    pub fn default_params(&self, dim: usize) -> KernelParams {
        KernelParams { lengthscales: vec![0.5; dim], signal_variance: 1.0, noise_variance: self.noise_floor }
    }
}

const MAX_JITTER_STEPS: usize = 12;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone)]
pub struct GaussianProcessState {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    params: KernelParams,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    degenerate: bool,
    lml: f64,
}

/// Pairwise squared coordinate differences, reused across likelihood
/// evaluations.
struct PairDiffs {
    n: usize,
    dim: usize,
    /// `sq[(i * n + j) * dim + d]` for `i > j`.
    sq: Vec<f64>,
}

impl PairDiffs {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let dim = x.first().map_or(0, Vec::len);
        let mut sq = vec![0.0; n * n * dim];
        for i in 0..n {
            for j in 0..i {
                for d in 0..dim {
                    let v = x[i][d] - x[j][d];
                    sq[(i * n + j) * dim + d] = v * v;
                }
            }
        }
        Self { n, dim, sq }
    }

    fn gram(&self, p: &KernelParams, diag_extra: f64) -> DMatrix<f64> {
        let n = self.n;
        let inv_l2: Vec<f64> = p.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = p.signal_variance + p.noise_variance + diag_extra;
            for j in 0..i {
                let base = (i * n + j) * self.dim;
                let r2: f64 = (0..self.dim).map(|d| self.sq[base + d] * inv_l2[d]).sum();
                let v = matern52_r(r2.sqrt(), p.signal_variance);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

/// Factorizes the Gram matrix, adding diagonal jitter (x10 per retry) on
/// failure. Returns the factor and the jitter used.
fn factorize(diffs: &PairDiffs, p: &KernelParams, floor: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let mut jitter = 0.0;
    for step in 0..MAX_JITTER_STEPS {
        if let Some(c) = Cholesky::new(diffs.gram(p, jitter)) {
            return Some((c, jitter));
        }
        jitter = floor.max(1e-12) * 10f64.powi(step as i32 + 1);
    }
    None
}

fn log_marginal(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let alpha = chol.solve(y);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let n = y.len() as f64;
    (-0.5 * y.dot(&alpha) - log_det_half - 0.5 * n * LN_2PI, alpha)
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn new(dim: usize, cfg: &GpConfig) -> Self {
        let mut lo = vec![cfg.lengthscale_bounds.0.ln(); dim];
        let mut hi = vec![cfg.lengthscale_bounds.1.ln(); dim];
        lo.push(cfg.signal_bounds.0.ln());
        hi.push(cfg.signal_bounds.1.ln());
        lo.push(cfg.noise_floor.ln());
        hi.push(cfg.noise_max.max(cfg.noise_floor).ln());
        Self { lo, hi }
    }

    fn to_params(&self, theta: &[f64]) -> KernelParams {
        let t: Vec<f64> = theta.iter().zip(self.lo.iter().zip(&self.hi)).map(|(v, (lo, hi))| v.clamp(*lo, *hi).exp()).collect();
        let dim = t.len() - 2;
        KernelParams { lengthscales: t[..dim].to_vec(), signal_variance: t[dim], noise_variance: t[dim + 1] }
    }
}

impl GaussianProcessState {
    /// Conditions a GP with fixed kernel hyper-parameters on `(x, scores)`.
    pub fn with_params(x: Vec<Vec<f64>>, scores: Vec<f64>, params: KernelParams) -> Result<Self, BayesOptError> {
        Self::build(x, scores, Some(params), &GpConfig::default())
    }

    fn build(
        x: Vec<Vec<f64>>,
        scores: Vec<f64>,
        params: Option<KernelParams>,
        cfg: &GpConfig,
    ) -> Result<Self, BayesOptError> {
        if x.len() < 2 || x.len() != scores.len() {
            return Err(BayesOptError::TooFewTrials(x.len().min(scores.len())));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(BayesOptError::NonFiniteScore);
        }
        let dim = x[0].len();
        if x.iter().any(|row| row.len() != dim) {
            return Err(BayesOptError::DimensionMismatch);
        }

        // Canonical row order makes the fit independent of trial order.
        let mut rows: Vec<(Vec<f64>, f64)> = x.into_iter().zip(scores).collect();
        rows.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.total_cmp(&b.1))
        });
        let (x, scores): (Vec<Vec<f64>>, Vec<f64>) = rows.into_iter().unzip();

        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        let degenerate = !(var.sqrt() > 1e-12 * mean.abs().max(1.0));
        let scale = if degenerate { 1.0 } else { var.sqrt() };
        let y = DVector::from_iterator(scores.len(), scores.iter().map(|s| (s - mean) / scale));
        let diffs = PairDiffs::new(&x);

        let params = match params {
            Some(p) => p,
            None if degenerate => cfg.default_params(dim),
            None => fit_params(&diffs, &y, dim, cfg),
        };
        let (chol, jitter) = factorize(&diffs, &params, cfg.noise_floor).ok_or(BayesOptError::Factorization)?;
        let (lml, alpha) = log_marginal(&chol, &y);
        Ok(Self {
            x,
            y: y.iter().copied().collect(),
            y_mean: mean,
            y_scale: scale,
            params,
            jitter,
            chol,
            alpha,
            degenerate,
            lml,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    /// Training targets in standardized units.
    pub fn standardized_targets(&self) -> &[f64] {
        &self.y
    }

    /// `(mean, std)` used to standardize the targets.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }

    /// True when all targets were equal and default hyper-parameters apply.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Extra diagonal jitter that the factorization needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// The regularized Gram matrix that was factorized.
    pub fn gram(&self) -> DMatrix<f64> {
        PairDiffs::new(&self.x).gram(&self.params, self.jitter)
    }

    /// Lower-triangular Cholesky factor of [`gram`](Self::gram).
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Predictive mean and latent variance in standardized units.
    pub fn posterior_standardized(&self, x: &[f64]) -> (f64, f64) {
        let p = &self.params;
        let k = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| matern52_r(scaled_distance(xi, x, &p.lengthscales), p.signal_variance)),
        );
        let mu = k.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("factor has a positive diagonal");
        let var = (p.signal_variance - v.norm_squared()).max(0.0);
        (mu, var)
    }

    /// Predictive mean and latent variance in score units.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let (mu, var) = self.posterior_standardized(x);
        (mu * self.y_scale + self.y_mean, var * self.y_scale * self.y_scale)
    }
}

fn fit_params(diffs: &PairDiffs, y: &DVector<f64>, dim: usize, cfg: &GpConfig) -> KernelParams {
    let bounds = Bounds::new(dim, cfg);
    let mut objective = |theta: &[f64]| -> f64 {
        let p = bounds.to_params(theta);
        match Cholesky::new(diffs.gram(&p, 0.0)) {
            Some(c) => -log_marginal(&c, y).0,
            None => f64::INFINITY,
        }
    };

    // Starting points depend only on the dimension, never on the data order.
    let mut rng = rng_for(0x6770_5eed, &[dim as u64]);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..cfg.starts.max(1) {
        let start: Vec<f64> = if s == 0 {
            let mut t = vec![0.3f64.ln(); dim];
            t.push(0.0);
            t.push(1e-3f64.max(cfg.noise_floor).ln());
            t
        } else {
            (0..dim + 2).map(|i| rng.random_range(bounds.lo[i]..=bounds.hi[i])).collect()
        };
        let (theta, value) = nelder_mead::minimize(&mut objective, &start, 0.7, cfg.max_evals, 1e-9);
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((theta, value));
        }
    }
    let (theta, value) = best.unwrap();
    if value.is_finite() {
        bounds.to_params(&theta)
    } else {
        cfg.default_params(dim)
    }
}

/// Fits a GP to encoded inputs and raw scores.
pub fn fit_gp_points(x: Vec<Vec<f64>>, scores: Vec<f64>, cfg: &GpConfig) -> Result<GaussianProcessState, BayesOptError> {
    GaussianProcessState::build(x, scores, None, cfg)
}

/// Fits a GP to the Ok trials of a run.
pub fn fit_gp(
    space: &ParamSpace,
    trials: &[TrialRecord<Assignment>],
    cfg: &GpConfig,
) -> Result<GaussianProcessState, BayesOptError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for t in trials.iter().filter(|t| t.is_ok()) {
        x.push(space.encode(&t.params)?);
        y.push(t.score.expect("ok trials carry a score"));
    }
    fit_gp_points(x, y, cfg)
}
