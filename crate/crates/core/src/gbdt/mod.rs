//! Histogram-based gradient boosted decision trees.
//!
//! Features are discretized once into quantile bins ([`BinnedMatrix`]).
//! Each boosting round computes first and second order gradients of the
//! loss at the current margins, optionally keeps only a gradient-based
//! one-side sample of the rows, and grows one regression tree per output
//! level by level, choosing splits by second-order gain.

pub mod bins;
pub mod ensemble;
pub mod goss;
pub mod objective;
pub mod params;
pub mod tree;
mod train;

pub use bins::{build_bins, BinnedMatrix};
pub use ensemble::Ensemble;
pub use goss::{goss_sample, RowSample};
pub use objective::{compute_gradients, log_loss, GradientPair};
pub use params::{Boosting, HyperParams, Objective};
pub use train::train;
pub use tree::{grow_tree, split_gain, Histogram, NestedNode, Node, Tree};

use thiserror::Error;

use crate::datasets::{DatasetError, Task};
use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("invalid hyper-parameters: {0}")]
    InvalidParams(String),
    #[error("goss rates must satisfy a >= 0, b > 0, a + b <= 1 (got a={top_rate}, b={other_rate})")]
    BadRates { top_rate: f64, other_rate: f64 },
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("objective {objective:?} does not fit task {task:?}")]
    ObjectiveMismatch { objective: Objective, task: Task },
    #[error("margin of row {row} is not finite")]
    NonFiniteMargin { row: usize },
    #[error("feature {feature} of row {row} is not finite")]
    NonFiniteFeature { row: usize, feature: usize },
    #[error("row {row} has {width} features, model expects at most {expected}")]
    RowTooWide { row: usize, width: usize, expected: usize },
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
