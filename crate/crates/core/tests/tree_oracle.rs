//! `grow_tree` against a brute-force search that re-partitions the rows
//! for every candidate split and recurses depth-first.

use boosthpo::datasets::{LabeledDataset, Task};
mod common;

use boosthpo::gbdt::{build_bins, grow_tree, GradientPair, HyperParams, RowSample};
use common::{dyadic, TreeOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn grow_tree_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut splits_seen = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=64);
        let m = rng.random_range(1..=4);
        let num_bins = rng.random_range(2..=8);
        let depth = rng.random_range(0..=2);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| f64::from(rng.random_range(0..12))).collect()).collect();
        let labels = vec![0; n];
        let d = LabeledDataset::from_dense_rows(&rows, labels, None, Task::Binary).unwrap();
        let binned = build_bins(&d, num_bins);
        // gradients and hessians on a 1/16 grid keep every partial sum exact
        let grads: Vec<GradientPair> =
            (0..n).map(|_| GradientPair { g: dyadic(&mut rng, -64, 64), h: dyadic(&mut rng, 1, 32) }).collect();
        let hp = HyperParams {
            max_depth: depth,
            lambda: [0.0, 0.5, 1.0, 3.0][rng.random_range(0..4)],
            learning_rate: [0.1, 0.3, 1.0][rng.random_range(0..3)],
            num_bins,
            min_child_hessian: [1e-3, 0.5][rng.random_range(0..2)],
            ..HyperParams::default()
        };
        let tree = grow_tree(&binned, &grads, &RowSample::all(n), &hp, &mut ChaCha8Rng::seed_from_u64(case));
        let oracle = TreeOracle { binned: &binned, grads: &grads, lambda: hp.lambda, eta: hp.learning_rate, min_h: hp.min_child_hessian };
        let all: Vec<usize> = (0..n).collect();
        assert_eq!(tree.to_nested(), oracle.grow(&all, depth), "case {case}");
        splits_seen += tree.num_leaves() - 1;
    }
    assert!(splits_seen > 100, "too few splits exercised: {splits_seen}");
}
