//! The sequential suggest / evaluate loop.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::acquisition::expected_improvement;
use super::gp::{fit_gp_points, GaussianProcessState, GpConfig};
use super::space::{Assignment, ParamSpace};
use super::BayesOptError;
use crate::seed::rng_for;
use crate::trial::TrialRecord;

pub const DEFAULT_BUDGET: usize = 150;
pub const DEFAULT_INIT_COUNT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestConfig {
    pub candidates: usize,
    /// Best observed points that are perturbed into extra candidates.
    pub perturbed: usize,
    pub perturb_sigma: f64,
    pub local_steps: usize,
    pub local_step: f64,
    /// EI margin, in standardized score units.
    pub xi: f64,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        Self { candidates: 2048, perturbed: 10, perturb_sigma: 0.05, local_steps: 32, local_step: 0.05, xi: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HpoConfig {
    pub budget: usize,
    pub init_count: usize,
    pub seed: u64,
    pub gp: GpConfig,
    pub suggest: SuggestConfig,
}

impl Default for HpoConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            init_count: DEFAULT_INIT_COUNT,
            seed: 0,
            gp: GpConfig::default(),
            suggest: SuggestConfig::default(),
        }
    }
}

/// A point chosen by [`suggest_next`].
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub ei: f64,
}

/// `n` points of a Latin hypercube in `[0, 1]^dim`: every axis is cut
/// into `n` strata and each stratum is hit exactly once.
pub fn latin_hypercube(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            p[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton points with a random Cranley-Patterson shift. Dimensions past
/// the prime table fall back to uniform draws.
pub fn shifted_halton(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
    (1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| match PRIMES.get(d) {
                    Some(&p) => (radical_inverse(i, p) + shift[d]).fract(),
                    None => rng.random(),
                })
                .collect()
        })
        .collect()
}

/// Picks the next point to evaluate by maximizing expected improvement
/// over quasi-random candidates and perturbed incumbents, then polishing
/// the best candidate with a coordinate search. When every candidate has
/// zero EI, returns the candidate with the largest posterior variance.
pub fn suggest_next(state: &GaussianProcessState, cfg: &SuggestConfig, rng: &mut impl Rng) -> Suggestion {
    let dim = state.dim();
    let targets = state.standardized_targets();
    let best = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ei_at = |x: &[f64]| {
        let (mu, var) = state.posterior_standardized(x);
        expected_improvement(mu, var, best, cfg.xi)
    };

    let mut candidates = shifted_halton(cfg.candidates, dim, rng);
    let mut ranked: Vec<usize> = (0..targets.len()).collect();
    ranked.sort_by(|&a, &b| targets[b].total_cmp(&targets[a]).then(a.cmp(&b)));
    let noise = Normal::new(0.0, cfg.perturb_sigma).expect("positive sigma");
    for &i in ranked.iter().take(cfg.perturbed) {
        let p: Vec<f64> = state.inputs()[i].iter().map(|v| (v + noise.sample(rng)).clamp(0.0, 1.0)).collect();
        candidates.push(p);
    }

    let scores: Vec<f64> = candidates.iter().map(|c| ei_at(c)).collect();
    let mut top = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[top] {
            top = i;
        }
    }
    if scores[top] <= 0.0 {
        let mut widest = 0;
        let mut widest_var = f64::NEG_INFINITY;
        for (i, c) in candidates.iter().enumerate() {
            let (_, var) = state.posterior_standardized(c);
            if var > widest_var {
                widest = i;
                widest_var = var;
            }
        }
        return Suggestion { x: candidates.swap_remove(widest), ei: 0.0 };
    }

    let mut x = candidates.swap_remove(top);
    let mut value = scores[top];
    let mut step = cfg.local_step;
    for _ in 0..cfg.local_steps {
        let mut improved = false;
        for d in 0..dim {
            for dir in [-1.0, 1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + dir * step).clamp(0.0, 1.0);
                if y[d] == x[d] {
                    continue;
                }
                let v = ei_at(&y);
                if v > value {
                    x = y;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Suggestion { x, ei: value }
}

const STREAM_DESIGN: u64 = 1;
const STREAM_SUGGEST: u64 = 2;
const STREAM_REPLACE: u64 = 3;

/// Runs the objective with panics and non-finite scores mapped to errors.
fn evaluate<F>(objective: &mut F, a: &Assignment) -> (Result<f64, String>, f64)
where
    F: FnMut(&Assignment) -> Result<(f64, f64), String>,
{
    let started = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| objective(a)));
    let fallback = started.elapsed().as_secs_f64();
    match outcome {
        Ok(Ok((score, seconds))) if score.is_finite() => (Ok(score), seconds.max(0.0)),
        Ok(Ok((score, seconds))) => (Err(format!("non-finite score {score}")), seconds.max(0.0)),
        Ok(Err(e)) => (Err(e), fallback),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "objective panicked".to_string());
            (Err(format!("panic: {msg}")), fallback)
        }
    }
}

fn record(index: usize, params: Assignment, outcome: (Result<f64, String>, f64)) -> TrialRecord<Assignment> {
    match outcome {
        (Ok(score), secs) => TrialRecord::ok(index, params, score, secs),
        (Err(e), secs) => TrialRecord::failed(index, params, secs, e),
    }
}

/// Bayesian optimization of `objective` (higher scores are better) for
/// exactly `cfg.budget` evaluations. The objective returns
/// `(score, seconds)`; errors, panics and non-finite scores become Failed
/// trials, which the surrogate sees at the worst observed score.
pub fn run_hpo<F>(space: &ParamSpace, mut objective: F, cfg: &HpoConfig) -> Result<Vec<TrialRecord<Assignment>>, BayesOptError>
where
    F: FnMut(&Assignment) -> Result<(f64, f64), String>,
{
    run_hpo_observed(space, &mut objective, cfg, |_| {})
}

/// [`run_hpo`] with a callback after each completed trial.
pub fn run_hpo_observed<F, O>(
    space: &ParamSpace,
    objective: &mut F,
    cfg: &HpoConfig,
    mut observe: O,
) -> Result<Vec<TrialRecord<Assignment>>, BayesOptError>
where
    F: FnMut(&Assignment) -> Result<(f64, f64), String>,
    O: FnMut(&TrialRecord<Assignment>),
{
    space.validate()?;
    if cfg.init_count < 2 || cfg.budget < cfg.init_count {
        return Err(BayesOptError::InvalidBudget { budget: cfg.budget, init_count: cfg.init_count });
    }
    let design = latin_hypercube(cfg.init_count, space.dimensions.len(), &mut rng_for(cfg.seed, &[STREAM_DESIGN]));
    let mut records: Vec<TrialRecord<Assignment>> = Vec::with_capacity(cfg.budget);
    let mut encoded: Vec<Vec<f64>> = Vec::with_capacity(cfg.budget);

    for i in 0..cfg.budget {
        let params = if i < cfg.init_count {
            space.from_unit_coords(&design[i])
        } else {
            let worst = records.iter().filter_map(|r| r.score).fold(f64::INFINITY, f64::min);
            let mut replace_rng = rng_for(cfg.seed, &[STREAM_REPLACE, i as u64]);
            let mut random_point =
                || space.from_unit_coords(&(0..space.dimensions.len()).map(|_| replace_rng.random()).collect::<Vec<_>>());
            if worst.is_finite() {
                let ys: Vec<f64> = records.iter().map(|r| r.score.unwrap_or(worst)).collect();
                let state = fit_gp_points(encoded.clone(), ys, &cfg.gp)?;
                let s = suggest_next(&state, &cfg.suggest, &mut rng_for(cfg.seed, &[STREAM_SUGGEST, i as u64]));
                let candidate = space.decode(&s.x);
                if records.iter().any(|r| r.params == candidate) {
                    random_point()
                } else {
                    candidate
                }
            } else {
                // nothing succeeded yet, so the surrogate has no anchor
                random_point()
            }
        };
        encoded.push(space.encode(&params)?);
        let outcome = evaluate(objective, &params);
        let rec = record(i, params, outcome);
        observe(&rec);
        records.push(rec);
    }
    Ok(records)
}

/// Uniform random search with the same trial bookkeeping, used as a control.
pub fn random_search<F>(space: &ParamSpace, mut objective: F, budget: usize, seed: u64) -> Result<Vec<TrialRecord<Assignment>>, BayesOptError>
where
    F: FnMut(&Assignment) -> Result<(f64, f64), String>,
{
    space.validate()?;
    let mut rng = rng_for(seed, &[0x7a4d]);
    Ok((0..budget)
        .map(|i| {
            let u: Vec<f64> = (0..space.dimensions.len()).map(|_| rng.random()).collect();
            let params = space.from_unit_coords(&u);
            let outcome = evaluate(&mut objective, &params);
            record(i, params, outcome)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesopt::gp::KernelParams;
    use crate::bayesopt::space::{Dimension, Scale};
    use crate::trial::best_so_far;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn latin_hypercube_strata() {
        let pts = latin_hypercube(10, 3, &mut ChaCha8Rng::seed_from_u64(1));
        for d in 0..3 {
            let mut strata: Vec<usize> = pts.iter().map(|p| (p[d] * 10.0) as usize).collect();
            strata.sort_unstable();
            assert_eq!(strata, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn halton_fills_the_cube() {
        let pts = shifted_halton(512, 4, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(pts.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        for d in 0..4 {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / 512.0;
            assert!((mean - 0.5).abs() < 0.02);
        }
    }

    fn unit_square() -> ParamSpace {
        ParamSpace::new(vec![
            Dimension::continuous("a", 0.0, 1.0, Scale::Linear),
            Dimension::continuous("b", 0.0, 1.0, Scale::Linear),
        ])
        .unwrap()
    }

    fn quadratic(a: &Assignment) -> Result<(f64, f64), String> {
        let x = a.get("a").unwrap().as_f64().unwrap();
        let y = a.get("b").unwrap().as_f64().unwrap();
        Ok((-((x - 0.3).powi(2) + (y - 0.7).powi(2)), 0.0))
    }

    #[test]
    fn budget_and_monotone_best() {
        let cfg = HpoConfig { budget: 15, init_count: 5, seed: 4, ..Default::default() };
        let recs = run_hpo(&unit_square(), quadratic, &cfg).unwrap();
        assert_eq!(recs.len(), 15);
        let best: Vec<f64> = best_so_far(&recs).into_iter().map(Option::unwrap).collect();
        assert!(best.windows(2).all(|w| w[0] <= w[1]));
        assert!(recs.iter().enumerate().all(|(i, r)| r.index == i));
    }

    #[test]
    fn invalid_budget() {
        let cfg = HpoConfig { budget: 3, init_count: 5, ..Default::default() };
        assert!(matches!(run_hpo(&unit_square(), quadratic, &cfg), Err(BayesOptError::InvalidBudget { .. })));
        let cfg = HpoConfig { budget: 3, init_count: 1, ..Default::default() };
        assert!(run_hpo(&unit_square(), quadratic, &cfg).is_err());
    }

    #[test]
    fn failures_do_not_stop_the_loop() {
        let mut calls = 0;
        let objective = |a: &Assignment| {
            calls += 1;
            match calls % 4 {
                0 => panic!("out of memory"),
                1 => Err("crashed".to_string()),
                _ => quadratic(a),
            }
        };
        let cfg = HpoConfig { budget: 12, init_count: 4, seed: 1, ..Default::default() };
        let recs = run_hpo(&unit_square(), objective, &cfg).unwrap();
        assert_eq!(recs.len(), 12);
        let failed: Vec<_> = recs.iter().filter(|r| !r.is_ok()).collect();
        assert_eq!(failed.len(), 6);
        assert!(failed.iter().all(|r| r.score.is_none()));
        assert!(failed.iter().any(|r| r.error.as_deref() == Some("panic: out of memory")));
    }

    #[test]
    fn all_points_decode_in_range() {
        let space = ParamSpace::new(vec![
            Dimension::integer("depth", 2, 14, Scale::Linear),
            Dimension::continuous("lambda", 1e-2, 1e5, Scale::Log10),
            Dimension::categorical("boosting", &["gbdt", "goss"]),
        ])
        .unwrap();
        let objective = |a: &Assignment| {
            let d = a.get("depth").unwrap().as_f64().unwrap();
            let l = a.get("lambda").unwrap().as_f64().unwrap().log10();
            let bonus = if a.get("boosting").unwrap().as_str() == Some("goss") { 0.5 } else { 0.0 };
            Ok((-(d - 6.0).powi(2) / 10.0 - (l - 1.0).powi(2) + bonus, 0.0))
        };
        let cfg = HpoConfig { budget: 14, init_count: 6, seed: 2, ..Default::default() };
        let recs = run_hpo(&space, objective, &cfg).unwrap();
        for r in &recs {
            space.encode(&r.params).unwrap();
        }
        // no repeated assignments
        for (i, r) in recs.iter().enumerate() {
            assert!(recs[..i].iter().all(|o| o.params != r.params));
        }
    }

    #[test]
    fn zero_ei_falls_back_to_variance() {
        // targets all equal -> best = 0 = posterior mean; with a huge xi EI is 0
        let params = KernelParams { lengthscales: vec![0.1], signal_variance: 1.0, noise_variance: 1e-6 };
        let state = GaussianProcessState::with_params(vec![vec![0.0], vec![0.2]], vec![0.0, 1.0], params).unwrap();
        let cfg = SuggestConfig { xi: 1e6, ..Default::default() };
        let s = suggest_next(&state, &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.ei, 0.0);
        // the candidate farthest from data has the widest posterior
        assert!(s.x[0] > 0.9, "{:?}", s.x);
    }

    #[test]
    fn deterministic_suggestion() {
        let params = KernelParams { lengthscales: vec![0.3, 0.3], signal_variance: 1.0, noise_variance: 1e-6 };
        let x = vec![vec![0.1, 0.2], vec![0.8, 0.5], vec![0.4, 0.9]];
        let state = GaussianProcessState::with_params(x, vec![0.1, 0.5, 0.3], params).unwrap();
        let a = suggest_next(&state, &SuggestConfig::default(), &mut ChaCha8Rng::seed_from_u64(5));
        let b = suggest_next(&state, &SuggestConfig::default(), &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(a.x.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
