//! Regression trees grown level-wise over histogram bins.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bins::BinnedMatrix;
use super::goss::RowSample;
use super::objective::GradientPair;
use super::HyperParams;

/// Second-order loss reduction of splitting `(G_L + G_R, H_L + H_R)` into
/// the two children, with L2 penalty `lambda` on leaf values.
#[inline]
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - (gl + gr) * (gl + gr) / (hl + hr + lambda))
}

/// Newton step `-G / (H + lambda)`, zero when the denominator vanishes.
#[inline]
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `bin <= bin` (equivalently raw value `< threshold`) go left.
    Split { feature: u32, bin: u16, threshold: f64, gain: f64, left: u32, right: u32 },
    Leaf { value: f64 },
}

/// Flat tree, root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![Node::Leaf { value }] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict_binned(&self, binned: &BinnedMatrix, row: usize) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, bin, left, right, .. } => {
                    let b = binned.feature_bins(feature as usize)[row];
                    i = if b <= bin { left } else { right } as usize;
                }
            }
        }
    }

    /// Walks the tree on a raw feature row; features past the row end are 0.
    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right, .. } => {
                    let v = row.get(feature as usize).copied().unwrap_or(0.0);
                    i = if v < threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn to_nested(&self) -> NestedNode {
        fn walk(nodes: &[Node], i: usize) -> NestedNode {
            match nodes[i] {
                Node::Leaf { value } => NestedNode::Leaf { value },
                Node::Split { feature, bin, threshold, gain, left, right } => NestedNode::Split {
                    feature,
                    bin,
                    threshold,
                    gain,
                    left: Box::new(walk(nodes, left as usize)),
                    right: Box::new(walk(nodes, right as usize)),
                },
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn from_nested(root: &NestedNode) -> Self {
        fn push(nodes: &mut Vec<Node>, n: &NestedNode) -> u32 {
            let at = nodes.len();
            match n {
                NestedNode::Leaf { value } => nodes.push(Node::Leaf { value: *value }),
                NestedNode::Split { feature, bin, threshold, gain, left, right } => {
                    nodes.push(Node::Leaf { value: 0.0 });
                    let l = push(nodes, left);
                    let r = push(nodes, right);
                    nodes[at] = Node::Split {
                        feature: *feature,
                        bin: *bin,
                        threshold: *threshold,
                        gain: *gain,
                        left: l,
                        right: r,
                    };
                }
            }
            at as u32
        }
        let mut nodes = Vec::new();
        push(&mut nodes, root);
        Self { nodes }
    }
}

/// Recursive form of a tree, used for serialization and comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NestedNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        bin: u16,
        threshold: f64,
        gain: f64,
        left: Box<NestedNode>,
        right: Box<NestedNode>,
    },
}

/// Per-(feature, bin) sums of weighted gradients for a fixed feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `offsets[i]..offsets[i + 1]` are the bins of `features[i]`.
    offsets: Vec<usize>,
    sums: Vec<GradientPair>,
}

impl Histogram {
    /// Accumulates `grads[r]` for `r` in `rows`, in the order given.
    pub fn build(binned: &BinnedMatrix, features: &[usize], grads: &[GradientPair], rows: &[u32]) -> Self {
        let mut offsets = Vec::with_capacity(features.len() + 1);
        offsets.push(0);
        for &f in features {
            offsets.push(offsets.last().unwrap() + binned.num_bins_used(f));
        }
        let per_feature: Vec<Vec<GradientPair>> = features
            .par_iter()
            .map(|&f| {
                let mut h = vec![GradientPair::default(); binned.num_bins_used(f)];
                let bins = binned.feature_bins(f);
                for &r in rows {
                    let slot = &mut h[bins[r as usize] as usize];
                    let gp = grads[r as usize];
                    slot.g += gp.g;
                    slot.h += gp.h;
                }
                h
            })
            .collect();
        Self { offsets, sums: per_feature.concat() }
    }

    pub fn feature(&self, i: usize) -> &[GradientPair] {
        &self.sums[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `self - other`, bin by bin.
    pub fn subtract(&self, other: &Histogram) -> Histogram {
        let sums = self
            .sums
            .iter()
            .zip(&other.sums)
            .map(|(a, b)| GradientPair { g: a.g - b.g, h: a.h - b.h })
            .collect();
        Histogram { offsets: self.offsets.clone(), sums }
    }

    pub fn add(&self, other: &Histogram) -> Histogram {
        let sums = self
            .sums
            .iter()
            .zip(&other.sums)
            .map(|(a, b)| GradientPair { g: a.g + b.g, h: a.h + b.h })
            .collect();
        Histogram { offsets: self.offsets.clone(), sums }
    }
}

#[derive(Debug, Clone, Copy)]
struct BestSplit {
    feature: usize,
    bin: usize,
    gain: f64,
}

/// Best split over the histogram. Ties keep the lowest feature, then the
/// lowest bin; only strictly positive gains qualify.
fn best_split(hist: &Histogram, features: &[usize], total: GradientPair, hp: &HyperParams) -> Option<BestSplit> {
    let mut best: Option<BestSplit> = None;
    let mut best_gain = 0.0;
    for (i, &f) in features.iter().enumerate() {
        let bins = hist.feature(i);
        let (mut gl, mut hl) = (0.0, 0.0);
        for (t, pair) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
            gl += pair.g;
            hl += pair.h;
            let gr = total.g - gl;
            let hr = total.h - hl;
            if hl < hp.min_child_hessian || hr < hp.min_child_hessian {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, hp.lambda);
            if gain > best_gain {
                best_gain = gain;
                best = Some(BestSplit { feature: f, bin: t, gain });
            }
        }
    }
    best
}

fn sum_rows(grads: &[GradientPair], rows: &[u32]) -> GradientPair {
    rows.iter().fold(GradientPair::default(), |acc, &r| {
        let gp = grads[r as usize];
        GradientPair { g: acc.g + gp.g, h: acc.h + gp.h }
    })
}

/// Per-tree feature subset of size `ceil(fraction * m)`, ascending.
pub fn sample_features(m: usize, fraction: f64, rng: &mut impl Rng) -> Vec<usize> {
    if fraction >= 1.0 || m == 0 {
        return (0..m).collect();
    }
    let k = ((fraction * m as f64 - 1e-9).ceil() as usize).clamp(1, m);
    let mut picked = index::sample(rng, m, k).into_vec();
    picked.sort_unstable();
    picked
}

struct Pending {
    node: usize,
    rows: Vec<u32>,
    total: GradientPair,
    hist: Option<Histogram>,
}

/// Grows one tree level by level up to `hp.max_depth`.
///
/// `grads` is indexed by row id; each sampled row's pair is scaled by its
/// multiplier before accumulation. A node is split on the (feature, bin)
/// with the largest positive gain whose children both keep at least
/// `min_child_hessian`; leaves get `-G / (H + lambda) * learning_rate`.
pub fn grow_tree(
    binned: &BinnedMatrix,
    grads: &[GradientPair],
    sample: &RowSample,
    hp: &HyperParams,
    rng: &mut impl Rng,
) -> Tree {
    let features: Vec<usize> = sample_features(binned.n_features(), hp.feature_fraction, rng)
        .into_iter()
        .filter(|&f| binned.num_bins_used(f) > 1)
        .collect();

    let mut weighted = vec![GradientPair::default(); grads.len()];
    for (&r, &w) in sample.rows.iter().zip(&sample.multipliers) {
        let gp = grads[r as usize];
        weighted[r as usize] = GradientPair { g: gp.g * w, h: gp.h * w };
    }

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let total = sum_rows(&weighted, &sample.rows);
    let mut frontier = vec![Pending { node: 0, rows: sample.rows.clone(), total, hist: None }];

    for depth in 0..hp.max_depth {
        if frontier.is_empty() || features.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for p in frontier {
            let hist = p.hist.unwrap_or_else(|| Histogram::build(binned, &features, &weighted, &p.rows));
            let Some(split) = best_split(&hist, &features, p.total, hp) else {
                nodes[p.node] = Node::Leaf { value: leaf_weight(p.total.g, p.total.h, hp.lambda) * hp.learning_rate };
                continue;
            };
            let bins = binned.feature_bins(split.feature);
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                p.rows.iter().partition(|&&r| bins[r as usize] as usize <= split.bin);
            let left_total = sum_rows(&weighted, &left_rows);
            let right_total = sum_rows(&weighted, &right_rows);

            // Children are only searched again if another level remains.
            let (left_hist, right_hist) = if depth + 1 < hp.max_depth {
                if left_rows.len() <= right_rows.len() {
                    let small = Histogram::build(binned, &features, &weighted, &left_rows);
                    let large = hist.subtract(&small);
                    (Some(small), Some(large))
                } else {
                    let small = Histogram::build(binned, &features, &weighted, &right_rows);
                    let large = hist.subtract(&small);
                    (Some(large), Some(small))
                }
            } else {
                (None, None)
            };

            let left = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[p.node] = Node::Split {
                feature: split.feature as u32,
                bin: split.bin as u16,
                threshold: binned.boundaries(split.feature)[split.bin],
                gain: split.gain,
                left: left as u32,
                right: left as u32 + 1,
            };
            next.push(Pending { node: left, rows: left_rows, total: left_total, hist: left_hist });
            next.push(Pending { node: left + 1, rows: right_rows, total: right_total, hist: right_hist });
        }
        frontier = next;
    }
    for p in frontier {
        nodes[p.node] = Node::Leaf { value: leaf_weight(p.total.g, p.total.h, hp.lambda) * hp.learning_rate };
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{LabeledDataset, Task};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(cols: &[Vec<f64>]) -> BinnedMatrix {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        let d = LabeledDataset::from_dense_rows(&rows, vec![0; n], None, Task::Binary).unwrap();
        BinnedMatrix::build(&d, 8)
    }

    fn pairs(g: &[f64], h: &[f64]) -> Vec<GradientPair> {
        g.iter().zip(h).map(|(&g, &h)| GradientPair { g, h }).collect()
    }

    #[test]
    fn gain_examples() {
        assert_eq!(split_gain(0.0, 1.0, 0.0, 1.0, 1.0), 0.0);
        assert_eq!(split_gain(2.0, 1.0, -2.0, 1.0, 0.0), 4.0);
        assert!(split_gain(2.0, 1.0, -1.0, 3.0, 100.0) < split_gain(2.0, 1.0, -1.0, 3.0, 0.0));
    }

    #[test]
    fn depth_zero_is_single_leaf() {
        let b = matrix(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let grads = pairs(&[1.0, -2.0, 0.5, 3.0], &[0.25, 0.25, 0.5, 1.0]);
        let hp = HyperParams { max_depth: 0, lambda: 1.0, learning_rate: 0.5, ..Default::default() };
        let t = grow_tree(&b, &grads, &RowSample::all(4), &hp, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes(), &[Node::Leaf { value: -(2.5 / 3.0) * 0.5 }]);
    }

    #[test]
    fn zero_gradients_give_zero_leaf() {
        let b = matrix(&[vec![1.0, 2.0, 3.0, 4.0], vec![4.0, 1.0, 3.0, 2.0]]);
        let grads = pairs(&[0.0; 4], &[0.25; 4]);
        let hp = HyperParams { max_depth: 3, lambda: 0.0, ..Default::default() };
        let t = grow_tree(&b, &grads, &RowSample::all(4), &hp, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes(), &[Node::Leaf { value: 0.0 }]);
    }

    #[test]
    fn splits_obvious_feature() {
        let b = matrix(&[vec![5.0, 5.0, 5.0, 5.0], vec![1.0, 2.0, 3.0, 4.0]]);
        let grads = pairs(&[1.0, 1.0, -1.0, -1.0], &[1.0; 4]);
        let hp = HyperParams { max_depth: 1, lambda: 0.0, learning_rate: 1.0, ..Default::default() };
        let t = grow_tree(&b, &grads, &RowSample::all(4), &hp, &mut ChaCha8Rng::seed_from_u64(0));
        match t.nodes()[0] {
            Node::Split { feature, bin, threshold, gain, .. } => {
                assert_eq!((feature, bin), (1, 1));
                assert_eq!(threshold, 2.5);
                assert_eq!(gain, 2.0);
            }
            n => panic!("{n:?}"),
        }
        assert_eq!(t.predict_raw(&[0.0, 1.0]), -1.0);
        assert_eq!(t.predict_raw(&[0.0, 3.0]), 1.0);
        assert_eq!(t.predict_raw(&[]), -1.0);
        assert_eq!(Tree::from_nested(&t.to_nested()), t);
    }

    #[test]
    fn feature_sampling_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(sample_features(10, 0.8, &mut rng).len(), 8);
        assert_eq!(sample_features(10, 0.01, &mut rng).len(), 1);
        assert_eq!(sample_features(3, 1.0, &mut rng), vec![0, 1, 2]);
        let s = sample_features(100, 0.3, &mut rng);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn histogram_is_additive(
            values in prop::collection::vec((0u8..6, 0u8..9, -16i32..16, 1i32..16, any::<bool>()), 2..60),
        ) {
            let cols = vec![
                values.iter().map(|v| f64::from(v.0)).collect::<Vec<_>>(),
                values.iter().map(|v| f64::from(v.1)).collect::<Vec<_>>(),
            ];
            let b = matrix(&cols);
            let grads: Vec<GradientPair> = values
                .iter()
                .map(|v| GradientPair { g: f64::from(v.2) / 16.0, h: f64::from(v.3) / 16.0 })
                .collect();
            let rows: Vec<u32> = (0..values.len() as u32).collect();
            let (left, right): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&r| values[r as usize].4);
            let features = [0, 1];
            let parent = Histogram::build(&b, &features, &grads, &rows);
            let l = Histogram::build(&b, &features, &grads, &left);
            let r = Histogram::build(&b, &features, &grads, &right);
            prop_assert_eq!(&l.add(&r), &parent);
            prop_assert_eq!(&parent.subtract(&l), &r);
        }

        #[test]
        fn gain_nonnegative_without_penalty(gl in -50.0f64..50.0, hl in 1e-3f64..50.0, gr in -50.0f64..50.0, hr in 1e-3f64..50.0) {
            prop_assert!(split_gain(gl, hl, gr, hr, 0.0) >= -1e-9 * (gl.abs() + gr.abs() + 1.0).powi(2));
        }
    }
}
