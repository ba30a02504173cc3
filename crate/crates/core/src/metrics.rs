//! Evaluation metrics and the class-frequency baseline.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{LabeledDataset, Task};
use crate::seed::rng_for;

/// Highest relevance grade accepted by NDCG.
pub const MAX_RELEVANCE: u32 = 4;
/// Rank cut-off for NDCG.
pub const NDCG_CUTOFF: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("AUC needs both classes present")]
    SingleClass,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("score {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("not a probability vector: {0:?}")]
    NotAProbability(Vec<f64>),
    #[error("relevance {0} is outside 0..={MAX_RELEVANCE}")]
    RelevanceOutOfRange(u32),
    #[error("no rows to evaluate")]
    Empty,
    #[error("metric {metric:?} does not apply to task {task:?}")]
    Unsupported { metric: Metric, task: Task },
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Auc,
    Ndcg10,
    LogLoss,
}

impl Metric {
    /// AUC for binary tasks, NDCG-10 for graded relevance.
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Binary => Metric::Auc,
            Task::Multiclass(_) => Metric::Ndcg10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Ndcg10 => "ndcg@10",
            Metric::LogLoss => "log_loss",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::LogLoss)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub value: f64,
    pub n_evaluated: usize,
    #[serde(skip)]
    pub per_query: Option<Vec<f64>>,
}

fn check_finite(scores: &[f64]) -> Result<()> {
    match scores.iter().position(|s| !s.is_finite()) {
        Some(index) => Err(MetricError::NonFiniteScore { index }),
        None => Ok(()),
    }
}

/// Area under the ROC curve via the rank-sum statistic; tied scores share
/// their average rank, which counts tied pairs as one half.
pub fn auc_roc(labels: &[u32], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(MetricError::LengthMismatch(labels.len(), scores.len()));
    }
    check_finite(scores)?;
    let positives = labels.iter().filter(|&&l| l != 0).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let rank = (i + j + 2) as f64 / 2.0;
        let pos_in_block = order[i..=j].iter().filter(|&&r| labels[r] != 0).count();
        positive_rank_sum += rank * pos_in_block as f64;
        i = j + 1;
    }
    let p = positives as f64;
    Ok((positive_rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

fn check_probability(probs: &[f64]) -> Result<()> {
    let sum: f64 = probs.iter().sum();
    if probs.is_empty() || probs.iter().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) || (sum - 1.0).abs() > 1e-6 {
        return Err(MetricError::NotAProbability(probs.to_vec()));
    }
    Ok(())
}

/// `sum_k k * p_k`.
pub fn expected_relevance(probs: &[f64]) -> Result<f64> {
    check_probability(probs)?;
    Ok(probs.iter().enumerate().map(|(k, &p)| k as f64 * p).sum())
}

/// Most probable grade, lowest index on ties.
pub fn most_probable_relevance(probs: &[f64]) -> Result<usize> {
    check_probability(probs)?;
    let mut best = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = k;
        }
    }
    Ok(best)
}

fn dcg_at(relevance: impl Iterator<Item = u32>) -> f64 {
    relevance
        .take(NDCG_CUTOFF)
        .enumerate()
        .map(|(i, rel)| (2f64.powi(rel as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// Per-query NDCG@10, queries in order of first appearance.
pub fn ndcg_per_query(query_ids: &[u64], truth: &[u32], predicted: &[f64]) -> Result<Vec<f64>> {
    if query_ids.len() != truth.len() {
        return Err(MetricError::LengthMismatch(query_ids.len(), truth.len()));
    }
    if truth.len() != predicted.len() {
        return Err(MetricError::LengthMismatch(truth.len(), predicted.len()));
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(&bad) = truth.iter().find(|&&t| t > MAX_RELEVANCE) {
        return Err(MetricError::RelevanceOutOfRange(bad));
    }
    check_finite(predicted)?;

    let mut slot: HashMap<u64, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (r, q) in query_ids.iter().enumerate() {
        let g = *slot.entry(*q).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(r);
    }

    Ok(groups
        .into_iter()
        .map(|mut rows| {
            let mut ideal: Vec<u32> = rows.iter().map(|&r| truth[r]).collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let ideal_dcg = dcg_at(ideal.into_iter());
            if ideal_dcg == 0.0 {
                return 0.0;
            }
            // stable: ties keep row order
            rows.sort_by(|&a, &b| predicted[b].total_cmp(&predicted[a]));
            dcg_at(rows.iter().map(|&r| truth[r])) / ideal_dcg
        })
        .collect())
}

/// Mean NDCG@10 over queries. Queries whose ideal DCG is zero score 0.
pub fn ndcg_at_10(query_ids: &[u64], truth: &[u32], predicted: &[f64]) -> Result<f64> {
    let per = ndcg_per_query(query_ids, truth, predicted)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Scores `probs` (one probability row per dataset row) with `metric`.
/// Graded-relevance tasks are ranked by expected relevance; a dataset
/// without query ids counts as a single query.
pub fn evaluate(metric: Metric, d: &LabeledDataset, probs: &[Vec<f64>]) -> Result<f64> {
    Ok(evaluate_report(metric, d, probs)?.value)
}

pub fn evaluate_report(metric: Metric, d: &LabeledDataset, probs: &[Vec<f64>]) -> Result<EvalReport> {
    if probs.len() != d.n_rows() {
        return Err(MetricError::LengthMismatch(probs.len(), d.n_rows()));
    }
    if probs.is_empty() {
        return Err(MetricError::Empty);
    }
    let (value, per_query) = match (metric, d.task()) {
        (Metric::Auc, Task::Binary) => {
            let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
            (auc_roc(d.labels(), &scores)?, None)
        }
        (Metric::Ndcg10, Task::Multiclass(_)) => {
            let relevance = probs.iter().map(|p| expected_relevance(p)).collect::<Result<Vec<_>>>()?;
            let single;
            let qids = match d.query_ids() {
                Some(q) => q,
                None => {
                    single = vec![0u64; d.n_rows()];
                    &single
                }
            };
            let per = ndcg_per_query(qids, d.labels(), &relevance)?;
            (per.iter().sum::<f64>() / per.len() as f64, Some(per))
        }
        (Metric::LogLoss, _) => {
            let total: f64 = probs.iter().zip(d.labels()).map(|(p, &y)| -p[y as usize].max(1e-300).ln()).sum();
            (total / d.n_rows() as f64, None)
        }
        (metric, task) => return Err(MetricError::Unsupported { metric, task }),
    };
    Ok(EvalReport { metric: metric.name().to_string(), value, n_evaluated: d.n_rows(), per_query })
}

/// Output of the frequency baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePrediction {
    /// Every row equals the training class frequencies.
    pub probabilities: Vec<Vec<f64>>,
    /// Labels drawn independently from those frequencies.
    pub labels: Vec<u32>,
}

/// The toy classifier that predicts classes by their training frequency.
pub fn baseline_predict(frequencies: &[f64], n: usize, seed: u64) -> Result<BaselinePrediction> {
    check_probability(frequencies)?;
    let mut rng = rng_for(seed, &[0xba5e]);
    let last_nonzero = frequencies.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let labels = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut cum = 0.0;
            for (k, &p) in frequencies.iter().enumerate() {
                cum += p;
                if u < cum {
                    return k as u32;
                }
            }
            last_nonzero as u32
        })
        .collect();
    Ok(BaselinePrediction { probabilities: vec![frequencies.to_vec(); n], labels })
}

/// The baseline scored on a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    /// Constant class-frequency probabilities, so every row ties.
    pub probability: f64,
    /// Sampled labels used as one-hot predictions.
    pub sampled: f64,
}

/// Scores both baseline variants on `d` with class `frequencies` taken
/// from the training data.
pub fn baseline_scores(metric: Metric, frequencies: &[f64], d: &LabeledDataset, seed: u64) -> Result<BaselineScores> {
    let pred = baseline_predict(frequencies, d.n_rows(), seed)?;
    let probability = evaluate(metric, d, &pred.probabilities)?;
    let one_hot: Vec<Vec<f64>> = pred
        .labels
        .iter()
        .map(|&l| (0..frequencies.len()).map(|k| if k == l as usize { 1.0 } else { 0.0 }).collect())
        .collect();
    Ok(BaselineScores { probability, sampled: evaluate(metric, d, &one_hot)? })
}
