//! Aggregates over a finished set of trials.

use serde::Serialize;

use super::OrchestratorError;
use crate::trial::TrialRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary<P> {
    pub trials: usize,
    pub ok: usize,
    pub failed: usize,
    pub best_score: Option<f64>,
    pub best_index: Option<usize>,
    pub best_params: Option<P>,
    /// Sum of trial seconds over Ok trials.
    pub total_seconds: f64,
    pub median_seconds: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Best score, its parameters and timing aggregates, all over Ok trials.
/// Ties go to the earliest record.
pub fn collect_results<P: Clone>(records: &[TrialRecord<P>], higher_is_better: bool) -> Result<RunSummary<P>, OrchestratorError> {
    if records.is_empty() {
        return Err(OrchestratorError::NoRecords);
    }
    let ok: Vec<&TrialRecord<P>> = records.iter().filter(|r| r.is_ok() && r.score.is_some()).collect();
    let mut best: Option<&TrialRecord<P>> = None;
    for r in &ok {
        let s = r.score.unwrap();
        let better = match best.and_then(|b| b.score) {
            None => true,
            Some(b) if higher_is_better => s > b,
            Some(b) => s < b,
        };
        if better {
            best = Some(r);
        }
    }
    let seconds: Vec<f64> = ok.iter().map(|r| r.seconds).collect();
    Ok(RunSummary {
        trials: records.len(),
        ok: ok.len(),
        failed: records.len() - ok.len(),
        best_score: best.and_then(|b| b.score),
        best_index: best.map(|b| b.index),
        best_params: best.map(|b| b.params.clone()),
        total_seconds: seconds.iter().sum(),
        median_seconds: median(seconds),
    })
}
