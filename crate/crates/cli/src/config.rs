//! The experiment config: one JSON document, optionally completed by a
//! named preset.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use boosthpo::bayesopt::optimizer::{DEFAULT_BUDGET, DEFAULT_INIT_COUNT};
use boosthpo::bayesopt::ParamSpace;
use boosthpo::datasets::{load_svmlight, make_synthetic, stratified_split, LabeledDataset, LoadOptions, Task};
use boosthpo::gbdt::{HyperParams, Objective};
use boosthpo::metrics::Metric;
use boosthpo::orchestrator::{apply_assignment, hpo_space, Profile};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// svmlight file, optionally gzipped.
    pub train: PathBuf,
    /// Validation file. Without one, `split.fraction` of `train` is held out.
    #[serde(default)]
    pub validation: Option<PathBuf>,
    /// Test file scored once with the best configuration.
    #[serde(default)]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub num_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_separation() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    /// Defaults to the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_fraction() -> f64 {
    0.25
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { fraction: default_fraction(), seed: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LauncherKind {
    #[default]
    Processes,
    Threads,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    #[default]
    Bayes,
    /// Uniform random control with the same budget.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    /// Inferred from the labels when absent.
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub metric: Option<Metric>,
    /// Grid profile; mutually exclusive with `space`.
    #[serde(default)]
    pub grid: Option<Profile>,
    /// HPO search space; mutually exclusive with `grid`.
    #[serde(default)]
    pub space: Option<ParamSpace>,
    /// Fixed hyper-parameters for `train`, and the base every grid point
    /// or HPO assignment is applied to.
    #[serde(default)]
    pub params: HyperParams,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_init_count")]
    pub init_count: usize,
    #[serde(default)]
    pub search: SearchKind,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "one")]
    pub slots_per_host: usize,
    #[serde(default)]
    pub launcher: LauncherKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_init_count() -> usize {
    DEFAULT_INIT_COUNT
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

/// Named defaults for the grid and HPO spaces of each profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Grid(Profile),
    Hpo(Profile),
}

impl Preset {
    pub const NAMES: [&'static str; 6] = ["xgb-grid", "lgbm-grid", "cat-grid", "xgb-hpo", "lgbm-hpo", "cat-hpo"];
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("unknown preset {s:?}; expected one of {}", Preset::NAMES.join(", ")));
        let (profile, kind) = s.rsplit_once('-').ok_or_else(bad)?;
        let profile = Profile::from_str(profile).map_err(|_| bad())?;
        match kind {
            "grid" => Ok(Preset::Grid(profile)),
            "hpo" => Ok(Preset::Hpo(profile)),
            _ => Err(bad()),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file. Relative data paths are resolved against the
    /// directory holding the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(data) = &mut cfg.data {
            let resolve = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            resolve(&mut data.train);
            for p in [&mut data.validation, &mut data.test].into_iter().flatten() {
                resolve(p);
            }
        }
        Ok(cfg)
    }

    /// Fills in the grid profile or search space of a preset. A config that
    /// already names the other kind of search is rejected.
    pub fn apply_preset(&mut self, preset: Preset) -> Result<()> {
        match preset {
            Preset::Grid(p) => {
                if self.space.is_some() {
                    return Err(CliError::Config("a grid preset cannot be combined with a `space`".into()));
                }
                self.grid = Some(p);
            }
            Preset::Hpo(p) => {
                if self.grid.is_some() {
                    return Err(CliError::Config("an hpo preset cannot be combined with a `grid`".into()));
                }
                self.space = Some(hpo_space(p));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.grid.is_some() && self.space.is_some() {
            return bad("set exactly one of `grid` and `space`");
        }
        match (&self.data, &self.synthetic) {
            (None, None) => return bad("no dataset: set `data` or `synthetic`"),
            (Some(_), Some(_)) => return bad("set only one of `data` and `synthetic`"),
            _ => {}
        }
        if !(0.0..1.0).contains(&self.split.fraction) {
            return bad("split.fraction must be in [0, 1)");
        }
        if self.workers == 0 || self.slots_per_host == 0 {
            return bad("workers and slots_per_host must be >= 1");
        }
        if let Some(space) = &self.space {
            space.validate()?;
            // every dimension has to name a hyper-parameter
            let center = space.from_unit_coords(&vec![0.5; space.dimensions.len()]);
            apply_assignment(&self.params, &center)?;
        }
        self.params.validate()?;
        Ok(())
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.seed)
    }
}

/// Train, validation and optional test sets of one experiment.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
    pub test: Option<LabeledDataset>,
}

impl Datasets {
    pub fn task(&self) -> Task {
        self.train.task()
    }
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<Datasets> {
    let (full, validation, test) = match (&cfg.data, &cfg.synthetic) {
        (Some(data), _) => {
            let opts = LoadOptions { num_features: data.num_features, task: cfg.task };
            let load = |p: &PathBuf, opts| load_svmlight(p, opts).map_err(|e| CliError::Data(format!("{}: {e}", p.display())));
            let train = load(&data.train, opts)?;
            // later files must agree with the task of the training file
            let opts = LoadOptions { task: Some(train.task()), ..opts };
            let validation = data.validation.as_ref().map(|p| load(p, opts)).transpose()?;
            let test = data.test.as_ref().map(|p| load(p, opts)).transpose()?;
            (train, validation, test)
        }
        (None, Some(s)) => {
            let d = make_synthetic(s.n, s.m, cfg.task.unwrap_or(Task::Binary), s.separation, s.seed)?;
            (d, None, None)
        }
        (None, None) => return Err(CliError::Config("no dataset configured".into())),
    };
    let (train, validation) = match validation {
        Some(v) => (full, v),
        None => {
            if cfg.split.fraction <= 0.0 {
                return Err(CliError::Config("split.fraction must be > 0 without a validation file".into()));
            }
            let split = stratified_split(&full, cfg.split.fraction, cfg.split_seed())?;
            (split.train, split.holdout)
        }
    };
    if train.n_rows() == 0 || validation.n_rows() == 0 {
        return Err(CliError::Data("train or validation split is empty".into()));
    }
    // files may stop short of the widest feature; pad them all to one width
    let width = train.n_features().max(validation.n_features()).max(test.as_ref().map_or(0, |t| t.n_features()));
    Ok(Datasets {
        train: train.with_num_features(width)?,
        validation: validation.with_num_features(width)?,
        test: test.map(|t| t.with_num_features(width)).transpose()?,
    })
}

/// The configured hyper-parameters with the objective matched to the task.
pub fn base_params(cfg: &ExperimentConfig, task: Task) -> HyperParams {
    let mut hp = cfg.params.clone();
    if hp.objective.num_classes() != task.num_classes() {
        hp.objective = Objective::for_task(task);
    }
    hp.seed = cfg.seed;
    hp
}

pub fn metric_for(cfg: &ExperimentConfig, task: Task) -> Metric {
    cfg.metric.unwrap_or(Metric::for_task(task))
}
