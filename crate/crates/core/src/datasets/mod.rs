//! Labeled datasets: a column-major sparse feature matrix with integer
//! class labels and optional query grouping.

mod split;
mod svmlight;
mod synthetic;

pub use split::{stratified_split, SplitResult};
pub use svmlight::{load_svmlight, parse_svmlight, write_svmlight, write_svmlight_file, LoadOptions};
pub use synthetic::make_synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: label `{label}` is not an integer")]
    NonIntegerLabel { line: usize, label: String },
    #[error("label {label} is outside the {classes} classes of the task")]
    LabelOutOfRange { label: i64, classes: usize },
    #[error("feature index {index} exceeds the configured width {width}")]
    FeatureIndexOutOfRange { index: usize, width: usize },
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("split fraction {0} is outside [0, 1)")]
    FractionOutOfRange(f64),
    #[error("bad synthetic shape: n={n}, m={m} (need n >= 2, m >= 1)")]
    BadShape { n: usize, m: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Learning task. Binary labels are {0, 1}; multiclass labels are 0..C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Binary,
    Multiclass(usize),
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::Multiclass(c) => c,
        }
    }
}

/// Nonzero entries of one feature, rows strictly ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseColumn {
    pub rows: Vec<u32>,
    pub values: Vec<f64>,
}

/// Feature matrix plus labels. Absent entries are the value `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    n_rows: usize,
    columns: Vec<SparseColumn>,
    labels: Vec<u32>,
    query_ids: Option<Vec<u64>>,
    task: Task,
}

impl LabeledDataset {
    /// Builds a dataset from sparse rows of `(feature, value)` pairs.
    /// Feature ids within a row may come in any order; zeros are dropped.
    pub fn from_sparse_rows(
        rows: &[Vec<(usize, f64)>],
        labels: Vec<u32>,
        query_ids: Option<Vec<u64>>,
        task: Task,
        n_features: usize,
    ) -> Result<Self> {
        let mut columns = vec![SparseColumn::default(); n_features];
        for (r, row) in rows.iter().enumerate() {
            for &(f, v) in row {
                if f >= n_features {
                    return Err(DatasetError::FeatureIndexOutOfRange { index: f + 1, width: n_features });
                }
                if v != 0.0 {
                    let col = &mut columns[f];
                    if col.rows.last() == Some(&(r as u32)) {
                        // duplicate feature in one row: last write wins
                        *col.values.last_mut().unwrap() = v;
                    } else {
                        col.rows.push(r as u32);
                        col.values.push(v);
                    }
                }
            }
        }
        Self::from_columns(rows.len(), columns, labels, query_ids, task)
    }

    pub fn from_dense_rows(
        rows: &[Vec<f64>],
        labels: Vec<u32>,
        query_ids: Option<Vec<u64>>,
        task: Task,
    ) -> Result<Self> {
        let m = rows.iter().map(Vec::len).max().unwrap_or(0);
        let sparse: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| r.iter().copied().enumerate().collect())
            .collect();
        Self::from_sparse_rows(&sparse, labels, query_ids, task, m)
    }

    pub(crate) fn from_columns(
        n_rows: usize,
        columns: Vec<SparseColumn>,
        labels: Vec<u32>,
        query_ids: Option<Vec<u64>>,
        task: Task,
    ) -> Result<Self> {
        if labels.len() != n_rows {
            return Err(DatasetError::LengthMismatch { what: "labels", expected: n_rows, got: labels.len() });
        }
        if let Some(q) = &query_ids {
            if q.len() != n_rows {
                return Err(DatasetError::LengthMismatch { what: "query ids", expected: n_rows, got: q.len() });
            }
        }
        let classes = task.num_classes();
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= classes) {
            return Err(DatasetError::LabelOutOfRange { label: bad as i64, classes });
        }
        Ok(Self { n_rows, columns, labels, query_ids, task })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn query_ids(&self) -> Option<&[u64]> {
        self.query_ids.as_deref()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn column(&self, feature: usize) -> &SparseColumn {
        &self.columns[feature]
    }

    /// Dense copy of one feature, zeros filled in.
    pub fn dense_column(&self, feature: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        let col = &self.columns[feature];
        for (&r, &v) in col.rows.iter().zip(&col.values) {
            out[r as usize] = v;
        }
        out
    }

    /// Row-major dense copy of the feature matrix (`n_rows * n_features`).
    pub fn to_dense_row_major(&self) -> Vec<f64> {
        let m = self.n_features();
        let mut out = vec![0.0; self.n_rows * m];
        for (f, col) in self.columns.iter().enumerate() {
            for (&r, &v) in col.rows.iter().zip(&col.values) {
                out[r as usize * m + f] = v;
            }
        }
        out
    }

    /// Nonzero `(feature, value)` pairs of each row, features ascending.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n_rows];
        for (f, col) in self.columns.iter().enumerate() {
            for (&r, &v) in col.rows.iter().zip(&col.values) {
                rows[r as usize].push((f, v));
            }
        }
        rows
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.rows.len()).sum()
    }

    /// `1 - nnz / (n * m)`; zero for a matrix without cells.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_rows * self.n_features();
        if cells == 0 {
            return 0.0;
        }
        1.0 - self.nnz() as f64 / cells as f64
    }

    /// Rows `rows` (in the given order) as a new dataset with the same width.
    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        let mut position = vec![u32::MAX; self.n_rows];
        for (new, &old) in rows.iter().enumerate() {
            position[old] = new as u32;
        }
        let columns = self
            .columns
            .iter()
            .map(|col| {
                let mut pairs: Vec<(u32, f64)> = col
                    .rows
                    .iter()
                    .zip(&col.values)
                    .filter(|(&r, _)| position[r as usize] != u32::MAX)
                    .map(|(&r, &v)| (position[r as usize], v))
                    .collect();
                pairs.sort_by_key(|p| p.0);
                SparseColumn {
                    rows: pairs.iter().map(|p| p.0).collect(),
                    values: pairs.iter().map(|p| p.1).collect(),
                }
            })
            .collect();
        LabeledDataset {
            n_rows: rows.len(),
            columns,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            query_ids: self.query_ids.as_ref().map(|q| rows.iter().map(|&r| q[r]).collect()),
            task: self.task,
        }
    }

    /// Pads (or keeps) the feature count at `width`.
    pub fn with_num_features(mut self, width: usize) -> Result<Self> {
        if width < self.columns.len() {
            let used = self.columns[width..].iter().any(|c| !c.rows.is_empty());
            if used {
                return Err(DatasetError::FeatureIndexOutOfRange { index: self.columns.len(), width });
            }
            self.columns.truncate(width);
        } else {
            self.columns.resize(width, SparseColumn::default());
        }
        Ok(self)
    }

    pub fn with_task(self, task: Task) -> Result<Self> {
        Self::from_columns(self.n_rows, self.columns, self.labels, self.query_ids, task)
    }
}

/// Empirical class distribution: component `c` is `count(c) / n`.
pub fn class_frequencies(d: &LabeledDataset) -> Result<Vec<f64>> {
    if d.n_rows() == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    let mut counts = vec![0usize; d.task().num_classes()];
    for &l in d.labels() {
        counts[l as usize] += 1;
    }
    let n = d.n_rows() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}
