use boosthpo::bayesopt::{
    expected_improvement, latin_hypercube, random_search, run_hpo, suggest_next, Assignment, Dimension,
    GaussianProcessState, HpoConfig, KernelParams, ParamSpace, Scale, SuggestConfig,
};
use boosthpo::seed::rng_for;
use boosthpo::trial::best_so_far;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn square() -> ParamSpace {
    ParamSpace::new(vec![
        Dimension::continuous("x", 0.0, 1.0, Scale::Linear),
        Dimension::continuous("y", 0.0, 1.0, Scale::Linear),
    ])
    .unwrap()
}

fn quadratic(a: &Assignment) -> Result<(f64, f64), String> {
    let x = a.get("x").unwrap().as_f64().unwrap();
    let y = a.get("y").unwrap().as_f64().unwrap();
    Ok((-((x - 0.3).powi(2) + (y - 0.7).powi(2)), 0.0))
}

#[test]
fn suggestion_reaches_dense_grid_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..10u64 {
        let x: Vec<Vec<f64>> = latin_hypercube(6, 1, &mut rng);
        let y: Vec<f64> = x.iter().map(|p| (7.0 * p[0]).sin() + 0.3 * p[0]).collect();
        let params = KernelParams { lengthscales: vec![0.2], signal_variance: 1.0, noise_variance: 1e-10 };
        let gp = GaussianProcessState::with_params(x, y, params).unwrap();
        let best = gp.standardized_targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cfg = SuggestConfig::default();
        let dense = (0..=20_000)
            .map(|i| {
                let (mu, var) = gp.posterior_standardized(&[i as f64 / 20_000.0]);
                expected_improvement(mu, var, best, cfg.xi)
            })
            .fold(0.0, f64::max);
        let s = suggest_next(&gp, &cfg, &mut rng_for(case, &[0]));
        assert!(s.ei >= dense * (1.0 - 1e-3), "case {case}: {} vs dense {dense}", s.ei);
    }
}

#[test]
fn full_initial_design_is_a_latin_hypercube() {
    let cfg = HpoConfig { budget: 12, init_count: 12, seed: 3, ..Default::default() };
    let recs = run_hpo(&square(), quadratic, &cfg).unwrap();
    assert_eq!(recs.len(), 12);
    for dim in ["x", "y"] {
        let mut strata: Vec<usize> =
            recs.iter().map(|r| (r.params.get(dim).unwrap().as_f64().unwrap() * 12.0) as usize).collect();
        strata.sort_unstable();
        assert_eq!(strata, (0..12).collect::<Vec<_>>());
    }
}

#[test]
fn beats_random_search_on_a_quadratic() {
    let budget = 40;
    let mut bo = Vec::new();
    let mut rs = Vec::new();
    for seed in 0..3 {
        let cfg = HpoConfig { budget, seed, ..Default::default() };
        let recs = run_hpo(&square(), quadratic, &cfg).unwrap();
        assert_eq!(recs.len(), budget);
        let curve = best_so_far(&recs);
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        bo.push(curve.last().unwrap().unwrap());
        let control = random_search(&square(), quadratic, budget, seed).unwrap();
        rs.push(best_so_far(&control).last().unwrap().unwrap());
    }
    bo.sort_by(f64::total_cmp);
    rs.sort_by(f64::total_cmp);
    assert!(bo[1] > rs[1], "median {} vs random {}", bo[1], rs[1]);
    assert!(bo[1] > -1e-2);
}

#[test]
fn same_seed_same_run() {
    let cfg = HpoConfig { budget: 14, seed: 8, ..Default::default() };
    let a = run_hpo(&square(), quadratic, &cfg).unwrap();
    let b = run_hpo(&square(), quadratic, &cfg).unwrap();
    let strip = |v: &[boosthpo::trial::TrialRecord<Assignment>]| v.iter().map(|r| (r.params.clone(), r.score)).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
}
