//! Bayesian hyper-parameter optimization with a Gaussian-process
//! surrogate (Matérn 5/2 kernel) and expected improvement.
//!
//! Scores are maximized. Parameters are encoded into the unit cube
//! ([`ParamSpace::encode`]); the surrogate is refitted after every trial
//! and the next point maximizes expected improvement in standardized
//! score units.

pub mod acquisition;
pub mod gp;
pub mod kernel;
pub mod nelder_mead;
pub mod optimizer;
pub mod space;

pub use acquisition::expected_improvement;
pub use gp::{fit_gp, fit_gp_points, GaussianProcessState, GpConfig, KernelParams};
pub use kernel::matern52;
pub use optimizer::{latin_hypercube, random_search, run_hpo, run_hpo_observed, suggest_next, HpoConfig, SuggestConfig, Suggestion};
pub use space::{Assignment, Dimension, DimensionKind, ParamSpace, ParamValue, Scale};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BayesOptError {
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("need at least 2 trials to fit the surrogate, got {0}")]
    TooFewTrials(usize),
    #[error("surrogate inputs have inconsistent dimensions")]
    DimensionMismatch,
    #[error("surrogate targets must be finite")]
    NonFiniteScore,
    #[error("Gram matrix could not be factorized even with jitter")]
    Factorization,
    #[error("need budget >= init_count >= 2 (budget {budget}, init_count {init_count})")]
    InvalidBudget { budget: usize, init_count: usize },
}
