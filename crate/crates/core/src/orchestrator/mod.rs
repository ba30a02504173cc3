//! Grid search across worker processes.
//!
//! The grid is cut into contiguous partitions, one per worker. Workers
//! claim a per-host slot through the lock protocol in [`lock`], train
//! every configuration of their partition and append results to their
//! own file; the collector merges the files by grid index.

pub mod lock;
pub mod profile;
pub mod runner;
pub mod summary;

pub use lock::{acquire_slot, host_id_from_env, prepare_epoch, EpochSpec, SlotAssignment, HOST_ID_ENV};
pub use profile::{apply_assignment, enumerate_grid, hpo_space, Grid, GridAxis, Profile};
pub use runner::{evaluate_config, partition_ranges, run_grid, run_worker, GridRun, GridRunConfig, Launcher, WorkerJob};
pub use summary::{collect_results, RunSummary};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("unknown profile {0:?} (expected xgb, lgbm or cat)")]
    UnknownProfile(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("invalid {0}")]
    InvalidName(String),
    #[error("host {host} already has {slots} workers in this epoch")]
    TooManyWorkers { host: String, slots: usize },
    #[error("lock file {path} was written after the epoch started but before it was cleared")]
    StaleEpoch { path: PathBuf },
    #[error("rendezvous timed out with {found} of {expected} workers present")]
    RendezvousTimeout { expected: usize, found: usize },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("no trial records")]
    NoRecords,
    #[error("worker failed: {0}")]
    Worker(String),
    #[error(transparent)]
    Dataset(#[from] crate::datasets::DatasetError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
