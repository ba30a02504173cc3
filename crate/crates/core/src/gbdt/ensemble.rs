//! Trained models: prediction and the versioned JSON document.

use serde::{Deserialize, Serialize};

use super::objective::{sigmoid, softmax_into};
use super::tree::{NestedNode, Node, Tree};
use super::{GbdtError, Objective};
use crate::datasets::LabeledDataset;

pub const FORMAT_NAME: &str = "boosthpo-ensemble";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub(crate) objective: Objective,
    pub(crate) num_features: usize,
    pub(crate) base_margin: Vec<f64>,
    pub(crate) boundaries: Vec<Vec<f64>>,
    /// One list of trees per output; lists have equal length.
    pub(crate) trees: Vec<Vec<Tree>>,
}

/// Turns one row of margins into class probabilities.
pub(crate) fn margins_to_proba(objective: Objective, margins: &[f64], out: &mut [f64]) {
    match objective {
        Objective::BinaryLogistic => {
            let p = sigmoid(margins[0]);
            out[0] = 1.0 - p;
            out[1] = p;
        }
        Objective::MulticlassSoftmax(_) => softmax_into(margins, out),
        Objective::OneVsAll(_) => {
            let mut sum = 0.0;
            for (o, &m) in out.iter_mut().zip(margins) {
                *o = sigmoid(m);
                sum += *o;
            }
            if sum > 0.0 {
                out.iter_mut().for_each(|o| *o /= sum);
            } else {
                let uniform = 1.0 / out.len() as f64;
                out.iter_mut().for_each(|o| *o = uniform);
            }
        }
    }
}

impl Ensemble {
    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn base_margin(&self) -> &[f64] {
        &self.base_margin
    }

    pub fn boundaries(&self) -> &[Vec<f64>] {
        &self.boundaries
    }

    pub fn trees(&self) -> &[Vec<Tree>] {
        &self.trees
    }

    /// Completed boosting rounds.
    pub fn num_iterations(&self) -> usize {
        self.trees.first().map_or(0, Vec::len)
    }

    /// Keeps only the first `iterations` rounds.
    pub fn truncated(&self, iterations: usize) -> Ensemble {
        let mut e = self.clone();
        for list in &mut e.trees {
            list.truncate(iterations);
        }
        e
    }

    fn check_row(&self, r: usize, row: &[f64]) -> Result<(), GbdtError> {
        if row.len() > self.num_features {
            return Err(GbdtError::RowTooWide { row: r, width: row.len(), expected: self.num_features });
        }
        if let Some(f) = row.iter().position(|v| !v.is_finite()) {
            return Err(GbdtError::NonFiniteFeature { row: r, feature: f });
        }
        Ok(())
    }

    fn margins_unchecked(&self, row: &[f64], out: &mut [f64]) {
        for ((o, &base), trees) in out.iter_mut().zip(&self.base_margin).zip(&self.trees) {
            *o = base + trees.iter().map(|t| t.predict_raw(row)).sum::<f64>();
        }
    }

    /// Raw margins, one vector per row.
    pub fn predict_margins(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, GbdtError> {
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                self.check_row(r, row)?;
                let mut m = vec![0.0; self.objective.num_outputs()];
                self.margins_unchecked(row, &mut m);
                Ok(m)
            })
            .collect()
    }

    /// Class probabilities for raw rows; each row sums to one.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, GbdtError> {
        let margins = self.predict_margins(rows)?;
        Ok(margins
            .iter()
            .map(|m| {
                let mut p = vec![0.0; self.objective.num_classes()];
                margins_to_proba(self.objective, m, &mut p);
                p
            })
            .collect())
    }

    /// Class probabilities for every row of a dataset.
    pub fn predict_dataset(&self, d: &LabeledDataset) -> Result<Vec<Vec<f64>>, GbdtError> {
        let m = d.n_features();
        if m > self.num_features {
            // Extra columns are fine as long as they are empty.
            if let Some(f) = (self.num_features..m).find(|&f| !d.column(f).rows.is_empty()) {
                let r = d.column(f).rows[0] as usize;
                return Err(GbdtError::RowTooWide { row: r, width: f + 1, expected: self.num_features });
            }
        }
        let width = m.min(self.num_features);
        let dense = d.to_dense_row_major();
        let rows: Vec<Vec<f64>> = (0..d.n_rows()).map(|r| dense[r * m..r * m + width].to_vec()).collect();
        self.predict_proba(&rows)
    }

    /// One score per row: `P(y = 1)` for binary models, the expected class
    /// index (expected relevance) for multiclass models.
    pub fn predict_scores(&self, d: &LabeledDataset) -> Result<Vec<f64>, GbdtError> {
        let probs = self.predict_dataset(d)?;
        Ok(probs
            .iter()
            .map(|p| match self.objective {
                Objective::BinaryLogistic => p[1],
                _ => p.iter().enumerate().map(|(k, &pk)| k as f64 * pk).sum(),
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        let doc = EnsembleDoc {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            objective: self.objective,
            num_features: self.num_features,
            base_margin: self.base_margin.clone(),
            boundaries: self.boundaries.clone(),
            trees: self.trees.iter().map(|list| list.iter().map(Tree::to_nested).collect()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("ensemble serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GbdtError> {
        let doc: EnsembleDoc = serde_json::from_str(text)?;
        let corrupt = |msg: String| Err(GbdtError::CorruptModel(msg));
        if doc.format != FORMAT_NAME {
            return corrupt(format!("unknown format `{}`", doc.format));
        }
        if doc.version != FORMAT_VERSION {
            return Err(GbdtError::UnsupportedVersion(doc.version));
        }
        let outputs = doc.objective.num_outputs();
        if doc.base_margin.len() != outputs || doc.trees.len() != outputs {
            return corrupt(format!("expected {outputs} outputs"));
        }
        if doc.boundaries.len() != doc.num_features {
            return corrupt("boundaries do not match num_features".into());
        }
        if doc.trees.iter().any(|l| l.len() != doc.trees[0].len()) {
            return corrupt("tree lists differ in length".into());
        }
        let trees: Vec<Vec<Tree>> =
            doc.trees.iter().map(|list| list.iter().map(Tree::from_nested).collect()).collect();
        for tree in trees.iter().flatten() {
            for node in tree.nodes() {
                if let Node::Split { feature, bin, .. } = *node {
                    let f = feature as usize;
                    if f >= doc.num_features || bin as usize >= doc.boundaries[f].len() {
                        return corrupt(format!("split on feature {feature} bin {bin} is out of range"));
                    }
                }
            }
        }
        Ok(Ensemble {
            objective: doc.objective,
            num_features: doc.num_features,
            base_margin: doc.base_margin,
            boundaries: doc.boundaries,
            trees,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct EnsembleDoc {
    format: String,
    version: u32,
    objective: Objective,
    num_features: usize,
    base_margin: Vec<f64>,
    boundaries: Vec<Vec<f64>>,
    trees: Vec<Vec<NestedNode>>,
}
