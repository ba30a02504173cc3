use serde::{Deserialize, Serialize};

use super::GbdtError;
use crate::datasets::Task;

/// Rate defaults for gradient-based one-side sampling.
pub const GOSS_TOP_RATE: f64 = 0.2;
pub const GOSS_OTHER_RATE: f64 = 0.1;
pub const DEFAULT_NUM_BINS: usize = 256;
pub const DEFAULT_MIN_CHILD_HESSIAN: f64 = 1e-3;
pub const MAX_DEPTH_LIMIT: usize = 32;

fn goss_top_rate() -> f64 {
    GOSS_TOP_RATE
}

fn goss_other_rate() -> f64 {
    GOSS_OTHER_RATE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boosting {
    Gbdt,
    /// Keep the `top_rate` share of rows with the largest gradients, sample
    /// an `other_rate` share of the rest and up-weight it by
    /// `(1 - top_rate) / other_rate`.
    Goss {
        #[serde(default = "goss_top_rate")]
        top_rate: f64,
        #[serde(default = "goss_other_rate")]
        other_rate: f64,
    },
}

impl Boosting {
    pub fn goss() -> Self {
        Boosting::Goss { top_rate: GOSS_TOP_RATE, other_rate: GOSS_OTHER_RATE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    BinaryLogistic,
    MulticlassSoftmax(usize),
    /// `C` independent logistic models, probabilities renormalized.
    OneVsAll(usize),
}

impl Objective {
    pub fn num_classes(self) -> usize {
        match self {
            Objective::BinaryLogistic => 2,
            Objective::MulticlassSoftmax(c) | Objective::OneVsAll(c) => c,
        }
    }

    /// Margins (and trees) per row.
    pub fn num_outputs(self) -> usize {
        match self {
            Objective::BinaryLogistic => 1,
            Objective::MulticlassSoftmax(c) | Objective::OneVsAll(c) => c,
        }
    }

    /// Binary tasks get the logistic objective; multiclass tasks softmax.
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Binary => Objective::BinaryLogistic,
            Task::Multiclass(c) => Objective::MulticlassSoftmax(c),
        }
    }
}

/// One boosting configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub iterations: usize,
    pub max_depth: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub learning_rate: f64,
    /// Share of features offered to each tree.
    pub feature_fraction: f64,
    pub boosting: Boosting,
    pub num_bins: usize,
    pub objective: Objective,
    pub min_child_hessian: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            iterations: 100,
            max_depth: 6,
            lambda: 1.0,
            learning_rate: 0.1,
            feature_fraction: 1.0,
            boosting: Boosting::Gbdt,
            num_bins: DEFAULT_NUM_BINS,
            objective: Objective::BinaryLogistic,
            min_child_hessian: DEFAULT_MIN_CHILD_HESSIAN,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |msg: String| Err(GbdtError::InvalidParams(msg));
        if self.max_depth > MAX_DEPTH_LIMIT {
            return bad(format!("max_depth {} exceeds {MAX_DEPTH_LIMIT}", self.max_depth));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad(format!("feature_fraction must be in (0, 1], got {}", self.feature_fraction));
        }
        if !(2..=65535).contains(&self.num_bins) {
            return bad(format!("num_bins must be in [2, 65535], got {}", self.num_bins));
        }
        if !(self.min_child_hessian >= 0.0) {
            return bad(format!("min_child_hessian must be >= 0, got {}", self.min_child_hessian));
        }
        if let Boosting::Goss { top_rate, other_rate } = self.boosting {
            super::goss::check_rates(top_rate, other_rate)?;
        }
        if self.objective.num_classes() < 2 {
            return bad("objective needs at least two classes".into());
        }
        Ok(())
    }
}
