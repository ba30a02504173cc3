//! Global quantile binning. Split candidates are proposed once, before
//! training, from the empirical distribution of each feature.

use rayon::prelude::*;

use crate::datasets::LabeledDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMatrix {
    n_rows: usize,
    /// `bins[f][r]`: bin id of row `r` for feature `f`.
    bins: Vec<Vec<u16>>,
    /// Strictly ascending split values per feature.
    boundaries: Vec<Vec<f64>>,
}

/// Bin id of `value`: the number of boundaries `<= value`.
#[inline]
pub fn bin_of(boundaries: &[f64], value: f64) -> u16 {
    boundaries.partition_point(|&b| b <= value) as u16
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) * 0.5;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Split values for one feature. With at most `num_bins` distinct values
/// every value gets its own bin (boundaries at midpoints); otherwise the
/// boundaries sit at the `k / num_bins` empirical quantiles, deduplicated.
pub fn quantile_boundaries(values: &[f64], num_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= num_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = sorted.len();
    let min = sorted[0];
    let mut out: Vec<f64> = Vec::with_capacity(num_bins - 1);
    for k in 1..num_bins {
        let idx = (k * n).div_ceil(num_bins).clamp(1, n - 1);
        let (lo, hi) = (sorted[idx - 1], sorted[idx]);
        let b = if lo < hi { midpoint(lo, hi) } else { hi };
        if b > min && out.last().is_none_or(|&last| b > last) {
            out.push(b);
        }
    }
    out
}

impl BinnedMatrix {
    pub fn build(d: &LabeledDataset, num_bins: usize) -> Self {
        let boundaries: Vec<Vec<f64>> = (0..d.n_features())
            .into_par_iter()
            .map(|f| quantile_boundaries(&d.dense_column(f), num_bins))
            .collect();
        Self::with_boundaries(d, boundaries)
    }

    /// Bins `d` against existing boundaries.
    pub fn with_boundaries(d: &LabeledDataset, boundaries: Vec<Vec<f64>>) -> Self {
        let bins = (0..d.n_features())
            .into_par_iter()
            .map(|f| {
                let b = &boundaries[f];
                d.dense_column(f).into_iter().map(|v| bin_of(b, v)).collect()
            })
            .collect();
        Self { n_rows: d.n_rows(), bins, boundaries }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.bins.len()
    }

    pub fn feature_bins(&self, feature: usize) -> &[u16] {
        &self.bins[feature]
    }

    pub fn boundaries(&self, feature: usize) -> &[f64] {
        &self.boundaries[feature]
    }

    pub fn all_boundaries(&self) -> &[Vec<f64>] {
        &self.boundaries
    }

    pub fn num_bins_used(&self, feature: usize) -> usize {
        self.boundaries[feature].len() + 1
    }
}

/// Free-function form of [`BinnedMatrix::build`].
pub fn build_bins(d: &LabeledDataset, num_bins: usize) -> BinnedMatrix {
    BinnedMatrix::build(d, num_bins)
}
