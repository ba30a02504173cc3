mod common;

use boosthpo::datasets::{make_synthetic, stratified_split, LabeledDataset, Task};
use boosthpo::gbdt::{goss_sample, train, Boosting, Ensemble, HyperParams, Node, Objective};
use boosthpo::metrics::{auc_roc, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{oracle_proba, rows_of};

#[test]
fn separable_synthetic_reaches_high_auc() {
    let d = make_synthetic(2000, 10, Task::Binary, 4.0, 11).unwrap();
    let split = stratified_split(&d, 0.25, 11).unwrap();
    let hp = HyperParams { iterations: 50, max_depth: 4, ..HyperParams::default() };
    let (model, _) = train(&split.train, &hp, None).unwrap();
    let auc = auc_roc(split.holdout.labels(), &model.predict_scores(&split.holdout).unwrap()).unwrap();
    assert!(auc >= 0.99, "auc {auc}");
}

#[test]
fn two_rows_are_separated() {
    let d = LabeledDataset::from_dense_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1], None, Task::Binary).unwrap();
    let hp = HyperParams { iterations: 10, max_depth: 1, ..HyperParams::default() };
    let (model, _) = train(&d, &hp, None).unwrap();
    let s = model.predict_scores(&d).unwrap();
    assert_eq!(auc_roc(d.labels(), &s).unwrap(), 1.0);
}

#[test]
fn proba_matches_tree_walk() {
    for (task, objective) in [
        (Task::Binary, Objective::BinaryLogistic),
        (Task::Multiclass(3), Objective::MulticlassSoftmax(3)),
        (Task::Multiclass(4), Objective::OneVsAll(4)),
    ] {
        let d = make_synthetic(300, 5, task, 1.0, 5).unwrap();
        let hp = HyperParams { iterations: 15, max_depth: 3, objective, feature_fraction: 0.6, ..HyperParams::default() };
        let (model, _) = train(&d, &hp, None).unwrap();
        let rows = rows_of(&d);
        let got = model.predict_proba(&rows).unwrap();
        for (row, p) in rows.iter().zip(&got) {
            let want = oracle_proba(&model, row);
            for (a, b) in p.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "{objective:?}: {a} vs {b}");
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn training_loss_never_rises() {
    for (seed, task, objective) in [
        (1, Task::Binary, Objective::BinaryLogistic),
        (2, Task::Binary, Objective::BinaryLogistic),
        (3, Task::Multiclass(3), Objective::MulticlassSoftmax(3)),
        (4, Task::Multiclass(5), Objective::MulticlassSoftmax(5)),
        (5, Task::Multiclass(3), Objective::OneVsAll(3)),
    ] {
        let d = make_synthetic(800, 6, task, 0.8, seed).unwrap();
        for lr in [0.1, 0.3] {
            let hp = HyperParams { iterations: 40, max_depth: 4, learning_rate: lr, objective, seed, ..HyperParams::default() };
            let (_, curve) = train(&d, &hp, Some((&d, Metric::LogLoss))).unwrap();
            assert_eq!(curve.len(), 40);
            for w in curve.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{objective:?} lr {lr}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn every_split_has_positive_gain() {
    let d = make_synthetic(500, 8, Task::Multiclass(3), 1.0, 8).unwrap();
    for boosting in [Boosting::Gbdt, Boosting::goss()] {
        let hp = HyperParams {
            iterations: 20,
            max_depth: 6,
            boosting,
            objective: Objective::MulticlassSoftmax(3),
            feature_fraction: 0.5,
            ..HyperParams::default()
        };
        let (model, _) = train(&d, &hp, None).unwrap();
        for tree in model.trees().iter().flatten() {
            for node in tree.nodes() {
                if let Node::Split { gain, .. } = node {
                    assert!(*gain > 0.0);
                }
            }
        }
    }
}

#[test]
fn goss_with_full_top_rate_is_plain_boosting() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..20 {
        let task = if rng.random_bool(0.5) { Task::Binary } else { Task::Multiclass(3) };
        let d = make_synthetic(rng.random_range(50..400), rng.random_range(2..8), task, 1.0, case).unwrap();
        let base = HyperParams {
            iterations: rng.random_range(1..15),
            max_depth: rng.random_range(1..6),
            lambda: rng.random_range(0.0..5.0),
            learning_rate: rng.random_range(0.05..0.5),
            feature_fraction: rng.random_range(0.3..=1.0),
            num_bins: rng.random_range(4..64),
            objective: Objective::for_task(task),
            seed: rng.random(),
            ..HyperParams::default()
        };
        let other_rate = rng.random_range(0.05..0.5);
        let goss = HyperParams { boosting: Boosting::Goss { top_rate: 1.0, other_rate }, ..base.clone() };
        let (a, _) = train(&d, &base, None).unwrap();
        let (b, _) = train(&d, &goss, None).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "case {case}");
    }
}

#[test]
fn goss_gradient_sum_is_unbiased() {
    // counts are integral here (20 kept, 10 of 80 sampled), so the
    // reweighted sum is an unbiased estimate of the full sum
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
    let abs: Vec<f64> = g.iter().map(|x: &f64| x.abs()).collect();
    let truth: f64 = g.iter().sum();
    let draws = 10_000;
    let estimates: Vec<f64> = (0..draws)
        .map(|_| {
            let s = goss_sample(&abs, 0.2, 0.1, &mut rng).unwrap();
            s.rows.iter().zip(&s.multipliers).map(|(&r, &w)| g[r as usize] * w).sum()
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / draws as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let se = (var / draws as f64).sqrt();
    assert!((mean - truth).abs() <= 3.0 * se, "mean {mean} truth {truth} se {se}");
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let d = make_synthetic(400, 6, Task::Multiclass(4), 1.2, 21).unwrap();
    let hp = HyperParams {
        iterations: 12,
        objective: Objective::MulticlassSoftmax(4),
        boosting: Boosting::goss(),
        feature_fraction: 0.7,
        seed: 99,
        ..HyperParams::default()
    };
    let (a, _) = train(&d, &hp, None).unwrap();
    let (b, _) = train(&d, &hp, None).unwrap();
    let text = a.to_json();
    assert_eq!(text, b.to_json());
    let back = Ensemble::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    assert_eq!(back.predict_dataset(&d).unwrap(), a.predict_dataset(&d).unwrap());
    let other = HyperParams { seed: 100, ..hp };
    assert_ne!(train(&d, &other, None).unwrap().0.to_json(), text);
}

#[test]
fn zero_iterations_predicts_the_prior() {
    let d = make_synthetic(200, 3, Task::Binary, 1.0, 2).unwrap();
    let hp = HyperParams { iterations: 0, ..HyperParams::default() };
    let (model, _) = train(&d, &hp, None).unwrap();
    let positives = d.labels().iter().filter(|&&y| y == 1).count() as f64 / 200.0;
    for p in model.predict_dataset(&d).unwrap() {
        assert!((p[1] - positives).abs() < 1e-12);
    }
}
