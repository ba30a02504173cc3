//! Histogram-based gradient boosted decision trees, plus the experiment
//! machinery needed to tune them: a Gaussian-process Bayesian optimizer,
//! a multi-process grid search with file-lock slot assignment, and the
//! AUC / NDCG-10 metrics used to score trials.
//!
//! ```
//! use boosthpo::datasets::{make_synthetic, stratified_split, Task};
//! use boosthpo::gbdt::{train, HyperParams};
//! use boosthpo::metrics::auc_roc;
//!
//! let data = make_synthetic(600, 5, Task::Binary, 3.0, 7).unwrap();
//! let split = stratified_split(&data, 0.25, 7).unwrap();
//! let hp = HyperParams { iterations: 30, max_depth: 3, ..HyperParams::default() };
//! let (model, _) = train(&split.train, &hp, None).unwrap();
//! let scores = model.predict_scores(&split.holdout).unwrap();
//! let auc = auc_roc(split.holdout.labels(), &scores).unwrap();
//! assert!(auc > 0.95);
//! ```

pub mod bayesopt;
pub mod datasets;
pub mod gbdt;
pub mod metrics;
pub mod orchestrator;
pub mod seed;
pub mod trial;

/// The guide chapters are compiled as doc-tests so their snippets stay honest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/boosting.md")]
    mod boosting {}
    #[doc = include_str!("../../../book/src/goss.md")]
    mod goss {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/gaussian_process.md")]
    mod gaussian_process {}
    #[doc = include_str!("../../../book/src/hpo.md")]
    mod hpo {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
