//! File-lock slot assignment.
//!
//! Workers do not know which host they run on beyond an id read from the
//! environment, and they never talk to each other. Each one drops a lock
//! file named after its tag into `<lock_dir>/<epoch>/<host>/`, waits until
//! the whole epoch has joined, then sorts the file names in its host
//! directory and takes its own position as the slot id.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant, SystemTime};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;

pub const HOST_ID_ENV: &str = "BOOSTHPO_HOST_ID";
const LOCK_EXT: &str = "lock";

/// Host id from `BOOSTHPO_HOST_ID`, else the machine's hostname.
pub fn host_id_from_env() -> String {
    if let Ok(h) = std::env::var(HOST_ID_ENV) {
        if !h.is_empty() {
            return h;
        }
    }
    fs::read_to_string("/etc/hostname")
        .ok()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .or_else(|| std::env::var("HOSTNAME").ok())
        .unwrap_or_else(|| "localhost".to_string())
}

/// Everything a worker needs to join an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSpec {
    pub lock_dir: PathBuf,
    pub epoch: String,
    pub slots_per_host: usize,
    /// Lock files across all hosts that release the barrier.
    pub expected_workers: usize,
    pub timeout_ms: u64,
    pub poll_ms: u64,
}

impl EpochSpec {
    pub fn new(lock_dir: impl Into<PathBuf>, epoch: impl Into<String>, slots_per_host: usize, expected_workers: usize) -> Self {
        Self {
            lock_dir: lock_dir.into(),
            epoch: epoch.into(),
            slots_per_host,
            expected_workers,
            timeout_ms: 60_000,
            poll_ms: 5,
        }
    }

    pub fn epoch_dir(&self) -> PathBuf {
        self.lock_dir.join(&self.epoch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub host_id: String,
    pub slot: usize,
    pub lock_path: PathBuf,
}

fn check_name(what: &str, s: &str) -> Result<(), OrchestratorError> {
    let ok = !s.is_empty()
        && s != "."
        && s != ".."
        && !s.starts_with('.')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(OrchestratorError::InvalidName(format!("{what} {s:?}")))
    }
}

fn is_lock(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == LOCK_EXT) && p.file_name().is_some_and(|n| !n.to_string_lossy().starts_with('.'))
}

fn lock_files(dir: &Path) -> Result<Vec<PathBuf>, OrchestratorError> {
    let mut out = Vec::new();
    match fs::read_dir(dir) {
        Ok(entries) => {
            for e in entries {
                let p = e?.path();
                if is_lock(&p) {
                    out.push(p);
                }
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

fn host_dirs(epoch_dir: &Path) -> Result<Vec<PathBuf>, OrchestratorError> {
    let mut out = Vec::new();
    if let Ok(entries) = fs::read_dir(epoch_dir) {
        for e in entries {
            let e = e?;
            if e.file_type()?.is_dir() {
                out.push(e.path());
            }
        }
    }
    Ok(out)
}

/// Coordinator step: clears leftover lock files of this epoch and records
/// its start. Files carrying another epoch id, or older than `started`,
/// are removed. A file of this epoch written after `started` means a
/// worker joined before clearing finished, which aborts with
/// [`OrchestratorError::StaleEpoch`].
pub fn prepare_epoch(spec: &EpochSpec, started: SystemTime) -> Result<(), OrchestratorError> {
    check_name("epoch", &spec.epoch)?;
    let dir = spec.epoch_dir();
    for host in host_dirs(&dir)? {
        for f in lock_files(&host)? {
            let content = fs::read_to_string(&f).unwrap_or_default();
            let same_epoch = content.lines().nth(1) == Some(spec.epoch.as_str());
            let newer = fs::metadata(&f)?.modified()? > started;
            if same_epoch && newer {
                return Err(OrchestratorError::StaleEpoch { path: f });
            }
            fs::remove_file(&f)?;
        }
    }
    fs::create_dir_all(&dir)?;
    Ok(())
}

/// Worker step: writes this worker's lock file, waits for the barrier and
/// returns the slot. Fails with [`OrchestratorError::TooManyWorkers`]
/// when the host already holds `slots_per_host` lock files, or when the
/// sorted position lands past the last slot after a simultaneous join.
pub fn acquire_slot(spec: &EpochSpec, host_id: &str, worker_tag: &str) -> Result<SlotAssignment, OrchestratorError> {
    check_name("host id", host_id)?;
    check_name("worker tag", worker_tag)?;
    if spec.slots_per_host == 0 {
        return Err(OrchestratorError::TooManyWorkers { host: host_id.to_string(), slots: 0 });
    }
    let host_dir = spec.epoch_dir().join(host_id);
    fs::create_dir_all(&host_dir)?;
    let lock_path = host_dir.join(format!("{worker_tag}.{LOCK_EXT}"));
    let too_many = || OrchestratorError::TooManyWorkers { host: host_id.to_string(), slots: spec.slots_per_host };

    let present = lock_files(&host_dir)?;
    if present.iter().any(|p| p == &lock_path) {
        return Err(OrchestratorError::InvalidName(format!("worker tag {worker_tag:?} already joined")));
    }
    if present.len() >= spec.slots_per_host {
        return Err(too_many());
    }

    // write under a hidden name and rename so readers never see a partial file
    let tmp = host_dir.join(format!(".{worker_tag}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        write!(f, "{worker_tag}\n{}\n", spec.epoch)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &lock_path)?;

    let deadline = Instant::now() + Duration::from_millis(spec.timeout_ms);
    loop {
        let mut found = 0;
        for h in host_dirs(&spec.epoch_dir())? {
            found += lock_files(&h)?.len();
        }
        if found >= spec.expected_workers {
            break;
        }
        if Instant::now() >= deadline {
            let _ = fs::remove_file(&lock_path);
            return Err(OrchestratorError::RendezvousTimeout { expected: spec.expected_workers, found });
        }
        thread::sleep(Duration::from_millis(spec.poll_ms));
    }

    let mut names: Vec<String> = lock_files(&host_dir)?
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    let own = format!("{worker_tag}.{LOCK_EXT}");
    let slot = names.iter().position(|n| n == &own).expect("own lock file is present");
    if slot >= spec.slots_per_host {
        let _ = fs::remove_file(&lock_path);
        return Err(too_many());
    }
    Ok(SlotAssignment { host_id: host_id.to_string(), slot, lock_path })
}
