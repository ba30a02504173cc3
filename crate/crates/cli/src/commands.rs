use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use boosthpo::bayesopt::{random_search, run_hpo_observed, Assignment, HpoConfig};
use boosthpo::datasets::{class_frequencies, LabeledDataset};
use boosthpo::gbdt::{train, Ensemble, HyperParams};
use boosthpo::metrics::{baseline_scores, evaluate_report, BaselineScores, EvalReport, Metric};
use boosthpo::orchestrator::{
    apply_assignment, collect_results, enumerate_grid, evaluate_config, run_grid, GridRunConfig, Launcher, Profile,
    RunSummary,
};
use boosthpo::seed::derive_seed;
use boosthpo::trial::{write_trials_csv, write_trials_jsonl, TrialRecord};

use crate::config::{base_params, load_datasets, metric_for, Datasets, ExperimentConfig, LauncherKind, SearchKind};
use crate::curve::{compute_curve, read_log, write_curve, LogRow};
use crate::error::{CliError, Result};

/// Salt for the baseline's label sampling stream.
const BASELINE_STREAM: u64 = 0xba5e;

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_trials<P: boosthpo::trial::ParamColumns + Serialize>(
    out: &Path,
    records: &[TrialRecord<P>],
    index_column: &str,
    higher_is_better: bool,
) -> Result<()> {
    let mut csv = create(&out.join("trials.csv"))?;
    write_trials_csv(records, index_column, &mut csv)?;
    csv.flush()?;
    let mut jsonl = create(&out.join("trials.jsonl"))?;
    write_trials_jsonl(records, &mut jsonl)?;
    jsonl.flush()?;
    let rows: Vec<LogRow> = records
        .iter()
        .map(|r| LogRow { index: r.index, score: r.score, seconds: r.seconds, ok: r.is_ok() })
        .collect();
    let mut curve = create(&out.join("curve.csv"))?;
    write_curve(&compute_curve(&rows, higher_is_better)?, &mut curve)?;
    curve.flush()?;
    Ok(())
}

fn baseline_of(data: &Datasets, metric: Metric, seed: u64) -> Result<BaselineScores> {
    let freq = class_frequencies(&data.train)?;
    Ok(baseline_scores(metric, &freq, &data.validation, derive_seed(seed, &[BASELINE_STREAM]))?)
}

fn score(model: &Ensemble, d: &LabeledDataset, metric: Metric) -> Result<EvalReport> {
    Ok(evaluate_report(metric, d, &model.predict_dataset(d)?)?)
}

/// Score of `hp` on the test file, or `None` without one.
fn test_score(data: &Datasets, hp: &HyperParams, metric: Metric) -> Result<Option<EvalReport>> {
    let Some(test) = &data.test else {
        return Ok(None);
    };
    let (model, _) = train(&data.train, hp, None)?;
    Ok(Some(score(&model, test, metric)?))
}

#[derive(Serialize)]
struct TrainReport {
    metric: Metric,
    train_rows: usize,
    validation: EvalReport,
    test: Option<EvalReport>,
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = load_datasets(cfg)?;
    let metric = metric_for(cfg, data.task());
    let hp = base_params(cfg, data.task());
    let (model, _) = train(&data.train, &hp, None)?;
    fs::write(out.join("model.json"), model.to_json())?;
    let report = TrainReport {
        metric,
        train_rows: data.train.n_rows(),
        validation: score(&model, &data.validation, metric)?,
        test: data.test.as_ref().map(|t| score(&model, t, metric)).transpose()?,
    };
    eprintln!("{} on validation: {}", metric.name(), report.validation.value);
    write_json(&out.join("report.json"), &report)
}

#[derive(Serialize)]
struct EvalOutput {
    metric: Metric,
    model: PathBuf,
    validation: EvalReport,
    test: Option<EvalReport>,
}

pub fn cmd_eval(cfg: &ExperimentConfig, model_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(model_path).map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let model = Ensemble::from_json(&text)?;
    let data = load_datasets(cfg)?;
    if model.objective().num_classes() != data.task().num_classes() {
        return Err(CliError::Data(format!(
            "model predicts {} classes, data has {}",
            model.objective().num_classes(),
            data.task().num_classes()
        )));
    }
    let metric = metric_for(cfg, data.task());
    let report = EvalOutput {
        metric,
        model: model_path.to_path_buf(),
        validation: score(&model, &data.validation, metric)?,
        test: data.test.as_ref().map(|t| score(&model, t, metric)).transpose()?,
    };
    eprintln!("{} on validation: {}", metric.name(), report.validation.value);
    write_json(&out.join("eval.json"), &report)
}

#[derive(Serialize)]
struct BaselineReport {
    metric: Metric,
    frequencies: Vec<f64>,
    validation: BaselineScores,
}

pub fn cmd_baseline(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = load_datasets(cfg)?;
    let metric = metric_for(cfg, data.task());
    let report = BaselineReport {
        metric,
        frequencies: class_frequencies(&data.train)?,
        validation: baseline_of(&data, metric, cfg.seed)?,
    };
    eprintln!("baseline {}: {} (sampled labels: {})", metric.name(), report.validation.probability, report.validation.sampled);
    write_json(&out.join("baseline.json"), &report)
}

#[derive(Serialize)]
struct GridSummary {
    profile: Profile,
    metric: Metric,
    configurations: usize,
    workers: usize,
    retried_partitions: Vec<usize>,
    baseline: BaselineScores,
    #[serde(flatten)]
    summary: RunSummary<HyperParams>,
    test: Option<EvalReport>,
}

pub fn cmd_grid(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let profile = cfg.grid.ok_or_else(|| CliError::Config("`grid` needs a grid profile or a *-grid preset".into()))?;
    let data = load_datasets(cfg)?;
    let metric = metric_for(cfg, data.task());
    let configs = enumerate_grid(profile, &base_params(cfg, data.task()));
    let work_dir = out.join(".work");
    let mut run_cfg = GridRunConfig::new(cfg.workers, cfg.slots_per_host, cfg.seed, &work_dir);
    run_cfg.launcher = match cfg.launcher {
        LauncherKind::Threads => Launcher::Threads,
        LauncherKind::Processes => Launcher::Subprocess { exe: std::env::current_exe()? },
    };
    eprintln!("grid {}: {} configurations on {} worker(s)", profile.name(), configs.len(), cfg.workers);
    let run = run_grid(&configs, &data.train, &data.validation, metric, &run_cfg)?;
    fs::remove_dir_all(&work_dir)?;

    write_trials(out, &run.records, "grid_index", metric.higher_is_better())?;
    let summary = collect_results(&run.records, metric.higher_is_better())?;
    let test = match &summary.best_params {
        Some(hp) => test_score(&data, hp, metric)?,
        None => None,
    };
    if let Some(best) = summary.best_score {
        eprintln!("best {}: {best} (grid index {})", metric.name(), summary.best_index.unwrap_or_default());
    }
    let report = GridSummary {
        profile,
        metric,
        configurations: configs.len(),
        workers: cfg.workers,
        retried_partitions: run.retried,
        baseline: baseline_of(&data, metric, cfg.seed)?,
        summary,
        test,
    };
    write_json(&out.join("summary.json"), &report)
}

#[derive(Serialize)]
struct HpoSummary {
    metric: Metric,
    search: SearchKind,
    budget: usize,
    baseline: BaselineScores,
    #[serde(flatten)]
    summary: RunSummary<Assignment>,
    best_hyper_params: Option<HyperParams>,
    /// Held-out score of the best configuration: the test file when one
    /// is configured, else the validation score itself.
    test_score: Option<f64>,
}

pub fn cmd_hpo(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let space = cfg.space.clone().ok_or_else(|| CliError::Config("`hpo` needs a `space` or a *-hpo preset".into()))?;
    let data = load_datasets(cfg)?;
    let metric = metric_for(cfg, data.task());
    if !metric.higher_is_better() {
        return Err(CliError::Config(format!("hpo maximizes its metric; {} is minimized", metric.name())));
    }
    let base = base_params(cfg, data.task());
    let mut objective = |a: &Assignment| {
        let hp = apply_assignment(&base, a).map_err(|e| e.to_string())?;
        evaluate_config(&hp, &data.train, &data.validation, metric)
    };
    let budget = cfg.budget;
    let mut best = f64::NEG_INFINITY;
    let mut progress = |r: &TrialRecord<Assignment>| {
        if let Some(s) = r.score {
            best = best.max(s);
        }
        match &r.error {
            Some(e) => eprintln!("trial {}/{budget}: failed ({e})", r.index + 1),
            None => eprintln!("trial {}/{budget}: {} (best {best})", r.index + 1, r.score.unwrap_or(f64::NAN)),
        }
    };
    let records = match cfg.search {
        SearchKind::Bayes => {
            let hpo = HpoConfig { budget, init_count: cfg.init_count, seed: cfg.seed, ..HpoConfig::default() };
            run_hpo_observed(&space, &mut objective, &hpo, &mut progress)?
        }
        SearchKind::Random => {
            let records = random_search(&space, &mut objective, budget, cfg.seed)?;
            records.iter().for_each(&mut progress);
            records
        }
    };
    write_trials(out, &records, "trial_index", true)?;
    let summary = collect_results(&records, true)?;
    let best_hp = summary.best_params.as_ref().map(|a| apply_assignment(&base, a)).transpose()?;
    let test_score = match (&best_hp, &data.test) {
        (Some(hp), Some(_)) => test_score(&data, hp, metric)?.map(|r| r.value),
        // the validation split doubles as the test set
        (Some(_), None) => summary.best_score,
        (None, _) => None,
    };
    let report = HpoSummary {
        metric,
        search: cfg.search,
        budget,
        baseline: baseline_of(&data, metric, cfg.seed)?,
        summary,
        best_hyper_params: best_hp,
        test_score,
    };
    write_json(&out.join("summary.json"), &report)
}

pub fn cmd_report_curve(log: &Path, minimize: bool, out: &Path) -> Result<()> {
    let rows = read_log(log)?;
    let points = compute_curve(&rows, !minimize)?;
    let mut w = create(&out.join("curve.csv"))?;
    write_curve(&points, &mut w)?;
    w.flush()?;
    Ok(())
}
