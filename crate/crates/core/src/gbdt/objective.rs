//! Loss gradients with respect to the raw margins.

use serde::{Deserialize, Serialize};

use super::{GbdtError, Objective};

/// First and second derivative of the loss at one margin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GradientPair {
    pub g: f64,
    pub h: f64,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// In-place softmax of one row of margins.
pub fn softmax_into(margins: &[f64], out: &mut [f64]) {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &m) in out.iter_mut().zip(margins) {
        *o = (m - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

#[inline]
fn logistic_pair(margin: f64, target: f64) -> GradientPair {
    let p = sigmoid(margin);
    GradientPair { g: p - target, h: p * (1.0 - p) }
}

/// Gradients for a row-major `(n, outputs)` margin matrix.
pub fn compute_gradients(margins: &[f64], labels: &[u32], objective: Objective) -> Result<Vec<GradientPair>, GbdtError> {
    let k = objective.num_outputs();
    debug_assert_eq!(margins.len(), labels.len() * k);
    if let Some(i) = margins.iter().position(|m| !m.is_finite()) {
        return Err(GbdtError::NonFiniteMargin { row: i / k });
    }
    let mut out = vec![GradientPair::default(); margins.len()];
    match objective {
        Objective::BinaryLogistic => {
            for ((o, &m), &y) in out.iter_mut().zip(margins).zip(labels) {
                *o = logistic_pair(m, f64::from(y));
            }
        }
        Objective::OneVsAll(_) => {
            for (r, &y) in labels.iter().enumerate() {
                for c in 0..k {
                    let target = if y as usize == c { 1.0 } else { 0.0 };
                    out[r * k + c] = logistic_pair(margins[r * k + c], target);
                }
            }
        }
        Objective::MulticlassSoftmax(_) => {
            let mut p = vec![0.0; k];
            for (r, &y) in labels.iter().enumerate() {
                softmax_into(&margins[r * k..(r + 1) * k], &mut p);
                for c in 0..k {
                    let target = if y as usize == c { 1.0 } else { 0.0 };
                    out[r * k + c] = GradientPair { g: p[c] - target, h: p[c] * (1.0 - p[c]) };
                }
            }
        }
    }
    Ok(out)
}

/// Mean negative log-likelihood of the labels under the margins.
pub fn log_loss(margins: &[f64], labels: &[u32], objective: Objective) -> f64 {
    let k = objective.num_outputs();
    let mut probs = vec![0.0; objective.num_classes()];
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        super::ensemble::margins_to_proba(objective, &margins[r * k..(r + 1) * k], &mut probs);
        total -= probs[y as usize].max(1e-300).ln();
    }
    total / labels.len().max(1) as f64
}
