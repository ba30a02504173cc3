//! Independent reference implementations shared by the test suites.
#![allow(dead_code)]

use boosthpo::gbdt::{BinnedMatrix, Ensemble, GradientPair, NestedNode, Objective};
use boosthpo::datasets::LabeledDataset;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct TreeOracle<'a> {
    pub binned: &'a BinnedMatrix,
    pub grads: &'a [GradientPair],
    pub lambda: f64,
    pub eta: f64,
    pub min_h: f64,
}

impl TreeOracle<'_> {
    fn sums(&self, rows: &[usize]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + self.grads[r].g, h + self.grads[r].h))
    }

    fn leaf(&self, rows: &[usize]) -> NestedNode {
        let (g, h) = self.sums(rows);
        NestedNode::Leaf { value: -g / (h + self.lambda) * self.eta }
    }

    pub fn grow(&self, rows: &[usize], depth_left: usize) -> NestedNode {
        if depth_left == 0 {
            return self.leaf(rows);
        }
        let mut best: Option<(u32, u16, f64)> = None;
        for f in 0..self.binned.n_features() {
            let bins = self.binned.feature_bins(f);
            let nb = self.binned.boundaries(f).len();
            for t in 0..nb {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| bins[i] as usize <= t);
                let (gl, hl) = self.sums(&l);
                let (gr, hr) = self.sums(&r);
                if hl < self.min_h || hr < self.min_h {
                    continue;
                }
                let lam = self.lambda;
                let gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - (gl + gr) * (gl + gr) / (hl + hr + lam));
                if gain > best.map_or(0.0, |b| b.2) {
                    best = Some((f as u32, t as u16, gain));
                }
            }
        }
        let Some((feature, bin, gain)) = best else {
            return self.leaf(rows);
        };
        let bins = self.binned.feature_bins(feature as usize);
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| bins[i] <= bin);
        NestedNode::Split {
            feature,
            bin,
            threshold: self.binned.boundaries(feature as usize)[bin as usize],
            gain,
            left: Box::new(self.grow(&l, depth_left - 1)),
            right: Box::new(self.grow(&r, depth_left - 1)),
        }
    }
}

pub fn dyadic(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    f64::from(rng.random_range(lo..=hi)) / 16.0
}

pub fn auc_by_pairs(labels: &[u32], scores: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn dcg(rels: &[u32]) -> f64 {
    rels.iter().take(10).enumerate().map(|(i, &r)| (2f64.powi(r as i32) - 1.0) / ((i + 2) as f64).log2()).sum()
}

pub fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// NDCG@10 of one query: predicted order by descending score with ties in
/// row order, ideal DCG by trying every ordering.
pub fn ndcg_brute(truth: &[u32], predicted: &[f64]) -> f64 {
    let ideal = permutations(truth).iter().map(|p| dcg(p)).fold(0.0, f64::max);
    if ideal == 0.0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..truth.len()).collect();
    // insertion sort keeps equal scores in row order
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 && predicted[order[j - 1]] < predicted[order[j]] {
            order.swap(j - 1, j);
            j -= 1;
        }
    }
    let ranked: Vec<u32> = order.iter().map(|&i| truth[i]).collect();
    dcg(&ranked) / ideal
}

pub fn monotone(x: f64, kind: usize) -> f64 {
    // exact in floating point for the small integers used below
    match kind {
        0 => 3.0 * x * x * x + x + 5.0,
        1 => 8.0 * x - 1000.0,
        _ => x * x * x * x * x + 2.0 * x,
    }
}

pub fn walk(node: &NestedNode, row: &[f64]) -> f64 {
    match node {
        NestedNode::Leaf { value } => *value,
        NestedNode::Split { feature, threshold, left, right, .. } => {
            let v = row.get(*feature as usize).copied().unwrap_or(0.0);
            if v < *threshold {
                walk(left, row)
            } else {
                walk(right, row)
            }
        }
    }
}

/// Class probabilities by walking every tree by hand.
pub fn oracle_proba(model: &Ensemble, row: &[f64]) -> Vec<f64> {
    let margins: Vec<f64> = model
        .trees()
        .iter()
        .zip(model.base_margin())
        .map(|(list, base)| base + list.iter().map(|t| walk(&t.to_nested(), row)).sum::<f64>())
        .collect();
    match model.objective() {
        Objective::BinaryLogistic => {
            let p = 1.0 / (1.0 + (-margins[0]).exp());
            vec![1.0 - p, p]
        }
        Objective::MulticlassSoftmax(_) => {
            let z: f64 = margins.iter().map(|m| m.exp()).sum();
            margins.iter().map(|m| m.exp() / z).collect()
        }
        Objective::OneVsAll(_) => {
            let s: Vec<f64> = margins.iter().map(|m| 1.0 / (1.0 + (-m).exp())).collect();
            let z: f64 = s.iter().sum();
            s.iter().map(|x| x / z).collect()
        }
    }
}

pub fn rows_of(d: &LabeledDataset) -> Vec<Vec<f64>> {
    let m = d.n_features();
    let dense = d.to_dense_row_major();
    dense.chunks(m).map(<[f64]>::to_vec).collect()
}

/// `E[max(mu + sigma z - best - xi, 0)]` by composite Simpson over z.
pub fn ei_quadrature(mu: f64, sigma: f64, best: f64, xi: f64) -> f64 {
    let (lo, hi, steps) = (-12.0, 12.0, 200_000);
    let h = (hi - lo) / steps as f64;
    let f = |z: f64| (mu + sigma * z - best - xi).max(0.0) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut sum = f(lo) + f(hi);
    for i in 1..steps {
        sum += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

