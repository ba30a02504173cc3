//! Partitioned grid execution with a collector and per-worker result files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::lock::{acquire_slot, host_id_from_env, prepare_epoch, EpochSpec, SlotAssignment, HOST_ID_ENV};
use super::OrchestratorError;
use crate::datasets::{load_svmlight, write_svmlight_file, LabeledDataset, LoadOptions, Task};
use crate::gbdt::{train, HyperParams};
use crate::metrics::{evaluate, Metric};
use crate::seed::derive_seed;
use crate::trial::TrialRecord;

/// Trains `hp` on `train`, scores `holdout` with `metric` and returns
/// `(score, seconds)`, timing training plus prediction.
pub fn evaluate_config(hp: &HyperParams, train_set: &LabeledDataset, holdout: &LabeledDataset, metric: Metric) -> Result<(f64, f64), String> {
    let started = Instant::now();
    let (model, _) = train(train_set, hp, None).map_err(|e| e.to_string())?;
    let probs = model.predict_dataset(holdout).map_err(|e| e.to_string())?;
    let seconds = started.elapsed().as_secs_f64();
    let score = evaluate(metric, holdout, &probs).map_err(|e| e.to_string())?;
    Ok((score, seconds))
}

/// Contiguous partitions of `0..n`; sizes differ by at most one and the
/// larger ones come first.
pub fn partition_ranges(n: usize, workers: usize) -> Vec<Range<usize>> {
    assert!(workers > 0, "need at least one worker");
    let (q, r) = (n / workers, n % workers);
    let mut start = 0;
    (0..workers)
        .map(|k| {
            let len = q + usize::from(k < r);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Launcher {
    /// Workers are threads of the calling process, each handed a
    /// simulated host id.
    Threads,
    /// Workers are child processes running `<exe> worker --job <path>
    /// --partition <k>`, with the simulated host id in `BOOSTHPO_HOST_ID`.
    Subprocess { exe: PathBuf },
}

#[derive(Debug, Clone)]
pub struct GridRunConfig {
    pub workers: usize,
    pub slots_per_host: usize,
    pub seed: u64,
    pub launcher: Launcher,
    /// Scratch space for the job file, data copies, lock files and
    /// per-worker results.
    pub work_dir: PathBuf,
    pub lock_timeout_ms: u64,
    /// `(partition, round)` pairs whose worker panics after taking its
    /// slot. Used to exercise crash recovery.
    #[doc(hidden)]
    pub inject_crash: Vec<(usize, usize)>,
}

impl GridRunConfig {
    pub fn new(workers: usize, slots_per_host: usize, seed: u64, work_dir: impl Into<PathBuf>) -> Self {
        Self {
            workers,
            slots_per_host,
            seed,
            launcher: Launcher::Threads,
            work_dir: work_dir.into(),
            lock_timeout_ms: 120_000,
            inject_crash: Vec::new(),
        }
    }
}

/// What one worker needs, written to disk by the collector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerJob {
    pub train_path: PathBuf,
    pub holdout_path: PathBuf,
    pub num_features: usize,
    pub task: Task,
    pub metric: Metric,
    /// Full grid with per-trial seeds already applied.
    pub configs: Vec<HyperParams>,
    pub partitions: Vec<Range<usize>>,
    pub round: usize,
    pub epoch: EpochSpec,
    pub results_dir: PathBuf,
    #[serde(default)]
    pub inject_crash: Vec<(usize, usize)>,
}

impl WorkerJob {
    fn tag(&self, partition: usize) -> String {
        format!("w{partition:04}-r{}", self.round)
    }

    fn results_path(&self, partition: usize) -> PathBuf {
        self.results_dir.join(format!("part-{partition:04}-r{}.jsonl", self.round))
    }

    fn slot_path(&self, partition: usize) -> PathBuf {
        self.results_dir.join(format!("part-{partition:04}-r{}.slot.json", self.round))
    }
}

#[derive(Debug, Clone)]
pub struct GridRun {
    /// One record per configuration, sorted by grid index.
    pub records: Vec<TrialRecord<HyperParams>>,
    /// Slots taken by every worker that got past the lock protocol.
    pub slots: Vec<SlotAssignment>,
    /// Partitions that were relaunched after a crash.
    pub retried: Vec<usize>,
}

fn simulated_host(partition: usize, slots_per_host: usize) -> String {
    format!("host-{}", partition / slots_per_host)
}

fn partition_body(
    job: &WorkerJob,
    partition: usize,
    host: &str,
    train_set: &LabeledDataset,
    holdout: &LabeledDataset,
) -> Result<(), OrchestratorError> {
    let slot = acquire_slot(&job.epoch, host, &job.tag(partition))?;
    fs::write(job.slot_path(partition), serde_json::to_vec(&slot)?)?;
    if job.inject_crash.contains(&(partition, job.round)) {
        panic!("injected crash in partition {partition}");
    }
    let mut out = BufWriter::new(File::create(job.results_path(partition))?);
    for i in job.partitions[partition].clone() {
        let hp = &job.configs[i];
        let rec = match evaluate_config(hp, train_set, holdout, job.metric) {
            Ok((score, secs)) if score.is_finite() => TrialRecord::ok(i, hp.clone(), score, secs),
            Ok((score, secs)) => TrialRecord::failed(i, hp.clone(), secs, format!("non-finite score {score}")),
            Err(e) => TrialRecord::failed(i, hp.clone(), 0.0, e),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(())
}

fn load_job_data(job: &WorkerJob) -> Result<(LabeledDataset, LabeledDataset), OrchestratorError> {
    let opts = LoadOptions { num_features: Some(job.num_features), task: Some(job.task) };
    Ok((load_svmlight(&job.train_path, opts.clone())?, load_svmlight(&job.holdout_path, opts)?))
}

/// Entry point of a worker process: reads the job, takes a slot on the
/// host named by `BOOSTHPO_HOST_ID` (or the hostname) and runs its
/// partition.
pub fn run_worker(job_path: &Path, partition: usize) -> Result<(), OrchestratorError> {
    let job: WorkerJob = serde_json::from_slice(&fs::read(job_path)?)?;
    if partition >= job.partitions.len() {
        return Err(OrchestratorError::InvalidConfig(format!("partition {partition} out of range")));
    }
    let host = host_id_from_env();
    let (train_set, holdout) = load_job_data(&job)?;
    partition_body(&job, partition, &host, &train_set, &holdout)
}

fn read_records(path: &Path) -> Vec<TrialRecord<HyperParams>> {
    let Ok(f) = File::open(path) else {
        return Vec::new();
    };
    // a crashed worker may leave a torn last line; keep what parses
    BufReader::new(f)
        .lines()
        .map_while(Result::ok)
        .map_while(|l| serde_json::from_str(&l).ok())
        .collect()
}

fn unique_epoch(round: usize) -> String {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    format!("epoch-{}-{nanos}-r{round}", std::process::id())
}

/// Runs every configuration of `configs` on `train_set` / `holdout`.
/// Trial `i` trains with seed `derive_seed(seed, [i])`, so the results
/// do not depend on the worker count. A partition whose worker dies is
/// relaunched once; if that fails too, its missing trials are marked
/// Failed.
pub fn run_grid(
    configs: &[HyperParams],
    train_set: &LabeledDataset,
    holdout: &LabeledDataset,
    metric: Metric,
    cfg: &GridRunConfig,
) -> Result<GridRun, OrchestratorError> {
    if cfg.workers == 0 {
        return Err(OrchestratorError::InvalidConfig("workers must be >= 1".into()));
    }
    if cfg.slots_per_host == 0 {
        return Err(OrchestratorError::InvalidConfig("slots_per_host must be >= 1".into()));
    }
    if train_set.n_features() != holdout.n_features() || train_set.task() != holdout.task() {
        return Err(OrchestratorError::InvalidConfig("train and holdout sets disagree on width or task".into()));
    }
    let configs: Vec<HyperParams> = configs
        .iter()
        .enumerate()
        .map(|(i, hp)| HyperParams { seed: derive_seed(cfg.seed, &[i as u64]), ..hp.clone() })
        .collect();
    let partitions = partition_ranges(configs.len(), cfg.workers);

    let results_dir = cfg.work_dir.join("results");
    let lock_dir = cfg.work_dir.join("locks");
    fs::create_dir_all(&results_dir)?;
    fs::create_dir_all(&lock_dir)?;
    let (train_path, holdout_path) = (cfg.work_dir.join("train.svm"), cfg.work_dir.join("holdout.svm"));
    if matches!(cfg.launcher, Launcher::Subprocess { .. }) {
        write_svmlight_file(train_set, &train_path)?;
        write_svmlight_file(holdout, &holdout_path)?;
    }

    let mut done: Vec<Option<Vec<TrialRecord<HyperParams>>>> = vec![None; cfg.workers];
    let mut failure: Vec<String> = vec![String::new(); cfg.workers];
    let mut slots = Vec::new();
    let mut retried = Vec::new();

    for round in 0..2 {
        let launch: Vec<usize> = (0..cfg.workers).filter(|&k| done[k].is_none()).collect();
        if launch.is_empty() {
            break;
        }
        if round > 0 {
            retried = launch.clone();
        }
        let mut epoch = EpochSpec::new(&lock_dir, unique_epoch(round), cfg.slots_per_host, launch.len());
        epoch.timeout_ms = cfg.lock_timeout_ms;
        prepare_epoch(&epoch, SystemTime::now())?;
        let job = WorkerJob {
            train_path: train_path.clone(),
            holdout_path: holdout_path.clone(),
            num_features: train_set.n_features(),
            task: train_set.task(),
            metric,
            configs: configs.clone(),
            partitions: partitions.clone(),
            round,
            epoch: epoch.clone(),
            results_dir: results_dir.clone(),
            inject_crash: cfg.inject_crash.clone(),
        };
        let job_path = cfg.work_dir.join(format!("job-r{round}.json"));
        fs::write(&job_path, serde_json::to_vec_pretty(&job)?)?;

        let outcomes: Vec<Result<(), String>> = match &cfg.launcher {
            Launcher::Threads => thread::scope(|s| {
                let handles: Vec<_> = launch
                    .iter()
                    .map(|&k| {
                        let job = &job;
                        let host = simulated_host(k, cfg.slots_per_host);
                        s.spawn(move || {
                            panic::catch_unwind(AssertUnwindSafe(|| partition_body(job, k, &host, train_set, holdout)))
                                .map_err(|_| "worker panicked".to_string())
                                .and_then(|r| r.map_err(|e| e.to_string()))
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("worker panicked".into()))).collect()
            }),
            Launcher::Subprocess { exe } => {
                let mut children = Vec::new();
                for &k in &launch {
                    let child = Command::new(exe)
                        .arg("worker")
                        .arg("--job")
                        .arg(&job_path)
                        .arg("--partition")
                        .arg(k.to_string())
                        .env(HOST_ID_ENV, simulated_host(k, cfg.slots_per_host))
                        .stdout(std::process::Stdio::null())
                        .spawn();
                    children.push(child);
                }
                children
                    .into_iter()
                    .map(|c| match c.and_then(|mut c| c.wait()) {
                        Ok(status) if status.success() => Ok(()),
                        Ok(status) => Err(format!("worker exited with {status}")),
                        Err(e) => Err(format!("could not run worker: {e}")),
                    })
                    .collect()
            }
        };

        for (&k, outcome) in launch.iter().zip(outcomes) {
            if let Ok(text) = fs::read(job.slot_path(k)) {
                if let Ok(slot) = serde_json::from_slice::<SlotAssignment>(&text) {
                    slots.push(slot);
                }
            }
            let records = read_records(&job.results_path(k));
            match outcome {
                Ok(()) if records.len() == partitions[k].len() => {
                    done[k] = Some(records);
                    continue;
                }
                Ok(()) => failure[k] = format!("worker wrote {} of {} results", records.len(), partitions[k].len()),
                Err(e) => failure[k] = e,
            }
            if round == 1 {
                // keep whatever either attempt finished, fail the rest
                let mut have: Vec<TrialRecord<HyperParams>> = records;
                let first = read_records(&results_dir.join(format!("part-{k:04}-r0.jsonl")));
                for r in first {
                    if !have.iter().any(|h| h.index == r.index) {
                        have.push(r);
                    }
                }
                for i in partitions[k].clone() {
                    if !have.iter().any(|h| h.index == i) {
                        have.push(TrialRecord::failed(i, configs[i].clone(), 0.0, format!("worker crashed twice: {}", failure[k])));
                    }
                }
                done[k] = Some(have);
            }
        }
        let _ = fs::remove_dir_all(epoch.epoch_dir());
    }

    let mut records: Vec<TrialRecord<HyperParams>> = done.into_iter().flatten().flatten().collect();
    records.sort_by_key(|r| r.index);
    debug_assert!(records.iter().enumerate().all(|(i, r)| r.index == i));
    Ok(GridRun { records, slots, retried })
}
