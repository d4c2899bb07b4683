//! Repeated holdout + stratified cross-validation benchmark.
//!
//! For every repeat `r` the runner carves a stratified validation set with
//! seed `base_seed + r`, splits the remainder into stratified folds, and for
//! each fold trains every method on the training part with the test fold
//! driving early stopping. The returned best ensemble is scored on the
//! validation set, which never takes part in training or model selection.
//! All `repeats × folds` validation scores are stored and averaged together.
//!
//! Jobs run on a rayon pool; results are gathered in a fixed order, so the
//! report does not depend on the number of threads.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, SamplerConfig, SamplingMethod};
use crate::data::{self, Dataset, Fold, ImbalanceSummary, LabelColumn, SplitPlan};
use crate::meboost::{self, MeBoostConfig, MeBoostResult, TrajectoryPoint};
use crate::metrics::{self, RocCurve};
use crate::tree::LearnerKind;
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Meboost,
    AdaboostDt,
    AdaboostEt,
    Rusboost,
    Smoteboost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Meboost,
        Algorithm::AdaboostDt,
        Algorithm::AdaboostEt,
        Algorithm::Rusboost,
        Algorithm::Smoteboost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Meboost => "meboost",
            Algorithm::AdaboostDt => "adaboost-dt",
            Algorithm::AdaboostEt => "adaboost-et",
            Algorithm::Rusboost => "rusboost",
            Algorithm::Smoteboost => "smoteboost",
        }
    }

    /// Trains this algorithm with early stopping on `holdout`.
    pub fn train(
        self,
        train: &Dataset,
        holdout: &Dataset,
        boost: &MeBoostConfig,
        sampler: &SamplerConfig,
    ) -> Result<MeBoostResult> {
        let with = |method| SamplerConfig {
            method,
            ..sampler.clone()
        };
        match self {
            Algorithm::Meboost => meboost::train_meboost(train, holdout, boost),
            Algorithm::AdaboostDt => baselines::train_adaboost_single(
                train,
                holdout,
                LearnerKind::DecisionTree,
                &with(SamplingMethod::None),
                boost,
            ),
            Algorithm::AdaboostEt => baselines::train_adaboost_single(
                train,
                holdout,
                LearnerKind::ExtraTree,
                &with(SamplingMethod::None),
                boost,
            ),
            Algorithm::Rusboost => baselines::train_adaboost_single(
                train,
                holdout,
                LearnerKind::DecisionTree,
                &with(SamplingMethod::RandomUndersample),
                boost,
            ),
            Algorithm::Smoteboost => baselines::train_adaboost_single(
                train,
                holdout,
                LearnerKind::DecisionTree,
                &with(SamplingMethod::Smote),
                boost,
            ),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method {s:?}; expected one of meboost, adaboost-dt, adaboost-et, rusboost, smoteboost"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    #[default]
    Keel,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: DatasetFormat,
    /// CSV only: header name or zero-based index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    /// CSV only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
}

impl DatasetSource {
    /// Loads the file, resolving relative paths against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<Dataset> {
        let path = if self.path.is_absolute() {
            self.path.clone()
        } else {
            base_dir.join(&self.path)
        };
        let file = fs::File::open(&path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let d = match self.format {
            DatasetFormat::Keel => data::parse_keel(BufReader::new(file))?,
            DatasetFormat::Csv => {
                let column: LabelColumn = self
                    .label_column
                    .as_deref()
                    .ok_or_else(|| Error::Config(format!("{}: csv needs label_column", self.name)))?
                    .parse()
                    .expect("infallible");
                let positive = self.positive_label.as_deref().ok_or_else(|| {
                    Error::Config(format!("{}: csv needs positive_label", self.name))
                })?;
                data::parse_csv(file, &column, positive)?
            }
        };
        Ok(d.with_name(self.name.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    /// Column label; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub boost: MeBoostConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
}

impl MethodSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        MethodSpec {
            name: None,
            algorithm,
            boost: MeBoostConfig::default(),
            sampler: SamplerConfig::default(),
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(self.algorithm.as_str())
    }
}

fn default_base_seed() -> u64 {
    2017
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub split: SplitPlan,
    pub datasets: Vec<DatasetSource>,
    pub methods: Vec<MethodSpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("datasets must not be empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        self.split.validate()?;
        for (i, m) in self.methods.iter().enumerate() {
            m.boost.validate()?;
            m.sampler.validate()?;
            if self.methods[..i].iter().any(|o| o.label() == m.label()) {
                return Err(Error::Config(format!(
                    "duplicate method name {:?}",
                    m.label()
                )));
            }
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::Config(format!(
                    "duplicate dataset name {:?}",
                    d.name
                )));
            }
        }
        Ok(())
    }
}

/// One (repeat, fold) training run of one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub fold: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_auroc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_holdout_auroc: Option<f64>,
    pub best_round: usize,
    pub rounds_trained: usize,
    pub ensemble_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub algorithm: Algorithm,
    pub mean_auroc: Option<f64>,
    /// Sample standard deviation (n − 1 denominator).
    pub std_auroc: Option<f64>,
    /// Validation auROC of every successful run, in (repeat, fold) order.
    pub scores: Vec<f64>,
    pub n_failed: usize,
    pub runs: Vec<RunRecord>,
    /// ROC of the run with the highest validation auROC.
    pub roc: Option<RocCurve>,
    pub roc_run: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub summary: Option<ImbalanceSummary>,
    pub error: Option<String>,
    pub methods: Vec<MethodReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub seed_scheme: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub datasets: Vec<DatasetReport>,
}

impl ExperimentReport {
    pub fn dataset(&self, name: &str) -> Option<&DatasetReport> {
        self.datasets.iter().find(|d| d.name == name)
    }

    /// Mean validation auROC of `method` on `dataset`.
    pub fn mean(&self, dataset: &str, method: &str) -> Option<f64> {
        self.dataset(dataset)?
            .methods
            .iter()
            .find(|m| m.method == method)?
            .mean_auroc
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

const NOTES: &[&str] = &[
    "weight update: discrete AdaBoost exponential rule, renormalized each round",
    "zero weighted error clamped to 1e-10 before alpha",
    "early stopping: a score must strictly exceed the best (plus improvement_epsilon) to reset the window; a score equal to the best moves the best model to the longer ensemble; skipped rounds count as non-improving",
    "early stopping uses the CV test fold; reported scores use the separate validation set",
    "rejected learners: up to max_retries retries per round; extra trees reseeded, a rejected decision tree is replaced by an extra tree in alternating runs",
    "validation holdout and folds are stratified; holdout quotas use largest-remainder rounding with at least one instance per class",
    "mean and std are taken over all repeats x folds validation scores",
    "tree defaults: max_depth 8, min_leaf_weight 1/n of normalized weight, extra-tree candidates ceil(sqrt(features))",
];

struct PreparedDataset {
    index: usize,
    repeats: Vec<(Dataset, Vec<Fold>)>,
}

struct Job {
    dataset: usize,
    method: usize,
    repeat: usize,
    fold: usize,
}

fn prepare(d: &Dataset, plan: &SplitPlan, base_seed: u64) -> Result<Vec<(Dataset, Vec<Fold>)>> {
    (0..plan.repeats)
        .map(|r| {
            let repeat_seed = base_seed.wrapping_add(r as u64);
            let (rest, validation) =
                data::stratified_holdout(d, plan.validation_fraction, repeat_seed)?;
            let folds = data::stratified_kfold(&rest, plan.folds, seed::derive(repeat_seed, &[1]))?;
            Ok((validation, folds))
        })
        .collect()
}

fn run_job(
    spec: &MethodSpec,
    validation: &Dataset,
    fold: &Fold,
    run_seed: u64,
) -> (RunRecord, Option<RocCurve>) {
    let boost = MeBoostConfig {
        seed: run_seed,
        ..spec.boost.clone()
    };
    let outcome = spec
        .algorithm
        .train(&fold.train, &fold.test, &boost, &spec.sampler)
        .and_then(|result| {
            let margins = result.best_model.score_dataset(validation)?;
            let auc = metrics::auroc(&margins, validation.labels())?;
            let roc = metrics::roc_curve(&margins, validation.labels())?;
            Ok((result, auc, roc))
        });
    let mut record = RunRecord {
        repeat: 0,
        fold: 0,
        seed: run_seed,
        validation_auroc: None,
        best_holdout_auroc: None,
        best_round: 0,
        rounds_trained: 0,
        ensemble_len: 0,
        error: None,
        trajectory: Vec::new(),
    };
    match outcome {
        Ok((result, auc, roc)) => {
            record.validation_auroc = Some(auc);
            record.best_holdout_auroc = Some(result.best_score);
            record.best_round = result.best_round;
            record.rounds_trained = result.rounds_trained;
            record.ensemble_len = result.best_model.len();
            record.trajectory = result.trajectory;
            (record, Some(roc))
        }
        Err(e) => {
            record.error = Some(e.to_string());
            (record, None)
        }
    }
}

fn mean_std(scores: &[f64]) -> (Option<f64>, Option<f64>) {
    if scores.is_empty() {
        return (None, None);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = if scores.len() > 1 {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// Runs the protocol. `jobs = 0` uses every available core.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    base_dir: &Path,
    jobs: usize,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut reports: Vec<DatasetReport> = Vec::with_capacity(cfg.datasets.len());
    let mut prepared: Vec<PreparedDataset> = Vec::new();
    for (index, source) in cfg.datasets.iter().enumerate() {
        let loaded = source.load(base_dir).and_then(|d| {
            let summary = data::summarize(&d)?;
            let repeats = prepare(&d, &cfg.split, cfg.base_seed)?;
            Ok((summary, repeats))
        });
        match loaded {
            Ok((summary, repeats)) => {
                reports.push(DatasetReport {
                    name: source.name.clone(),
                    summary: Some(summary),
                    error: None,
                    methods: Vec::new(),
                });
                prepared.push(PreparedDataset { index, repeats });
            }
            Err(e) => reports.push(DatasetReport {
                name: source.name.clone(),
                summary: None,
                error: Some(e.to_string()),
                methods: Vec::new(),
            }),
        }
    }

    let mut job_list = Vec::new();
    for (p, prep) in prepared.iter().enumerate() {
        for method in 0..cfg.methods.len() {
            for (repeat, (_, folds)) in prep.repeats.iter().enumerate() {
                for fold in 0..folds.len() {
                    job_list.push(Job {
                        dataset: p,
                        method,
                        repeat,
                        fold,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(RunRecord, Option<RocCurve>)> = pool.install(|| {
        job_list
            .par_iter()
            .map(|job| {
                let prep = &prepared[job.dataset];
                let (validation, folds) = &prep.repeats[job.repeat];
                let repeat_seed = cfg.base_seed.wrapping_add(job.repeat as u64);
                let run_seed = seed::derive(repeat_seed, &[2, job.fold as u64]);
                let (mut record, roc) = run_job(
                    &cfg.methods[job.method],
                    validation,
                    &folds[job.fold],
                    run_seed,
                );
                record.repeat = job.repeat;
                record.fold = job.fold;
                (record, roc)
            })
            .collect()
    });

    let mut results = results.into_iter();
    for prep in &prepared {
        let report = &mut reports[prep.index];
        for spec in &cfg.methods {
            let n_runs: usize = prep.repeats.iter().map(|(_, f)| f.len()).sum();
            let mut runs = Vec::with_capacity(n_runs);
            let mut best: Option<(f64, (usize, usize), RocCurve)> = None;
            for (record, roc) in results.by_ref().take(n_runs) {
                if let (Some(auc), Some(roc)) = (record.validation_auroc, roc) {
                    if best.as_ref().is_none_or(|b| auc > b.0) {
                        best = Some((auc, (record.repeat, record.fold), roc));
                    }
                }
                runs.push(record);
            }
            let scores: Vec<f64> = runs.iter().filter_map(|r| r.validation_auroc).collect();
            let (mean_auroc, std_auroc) = mean_std(&scores);
            let n_failed = runs.len() - scores.len();
            let (roc_run, roc) = match best {
                Some((_, run, roc)) => (Some(run), Some(roc)),
                None => (None, None),
            };
            report.methods.push(MethodReport {
                method: spec.label().to_string(),
                algorithm: spec.algorithm,
                mean_auroc,
                std_auroc,
                scores,
                n_failed,
                runs,
                roc,
                roc_run,
            });
        }
    }

    Ok(ExperimentReport {
        provenance: Provenance {
            config: cfg.clone(),
            seed_scheme: "repeat r uses base_seed + r for the validation split; folds and training runs use streams derived from it".into(),
            notes: NOTES.iter().map(|s| s.to_string()).collect(),
        },
        datasets: reports,
    })
}

/// Rows are datasets, columns methods; each row's best mean (as displayed,
/// two decimals) is marked with `*`, including ties.
pub fn render_table(report: &ExperimentReport) -> String {
    let methods: Vec<String> = report
        .provenance
        .config
        .methods
        .iter()
        .map(|m| m.label().to_string())
        .collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for d in &report.datasets {
        let values: Vec<Option<String>> = methods
            .iter()
            .map(|m| {
                d.methods
                    .iter()
                    .find(|r| &r.method == m)
                    .and_then(|r| r.mean_auroc)
                    .map(|v| format!("{v:.2}"))
            })
            .collect();
        let best = values
            .iter()
            .flatten()
            .filter_map(|v| v.parse::<f64>().ok())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut row = vec![d.name.clone()];
        for v in values {
            row.push(match v {
                Some(v) if v.parse::<f64>().ok() == Some(best) => format!("{v}*"),
                Some(v) => v,
                None if d.error.is_some() => "error".into(),
                None => "-".into(),
            });
        }
        rows.push(row);
    }
    let mut header = vec!["dataset".to_string()];
    header.extend(methods);
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain(std::iter::once(header[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for row in &rows {
        line(&mut out, row);
    }
    out
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect::<String>()
        .trim_start_matches('.')
        .to_string()
}

/// Writes `report.json`, `summary.csv` and `roc/<dataset>__<method>.csv`
/// under `out_dir`; returns the written paths.
pub fn write_outputs(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir.join("roc"))?;
    let mut written = Vec::new();

    let json_path = out_dir.join("report.json");
    fs::write(&json_path, report.to_json()?)?;
    written.push(json_path);

    let mut summary = String::from("dataset,method,mean_auroc,std_auroc,n_runs,n_failed\n");
    for d in &report.datasets {
        for m in &d.methods {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{}",
                d.name,
                m.method,
                fmt(m.mean_auroc),
                fmt(m.std_auroc),
                m.scores.len(),
                m.n_failed
            );
        }
    }
    let summary_path = out_dir.join("summary.csv");
    fs::write(&summary_path, summary)?;
    written.push(summary_path);

    for d in &report.datasets {
        for m in &d.methods {
            if let Some(roc) = &m.roc {
                let path = out_dir.join("roc").join(format!(
                    "{}__{}.csv",
                    file_stem(&d.name),
                    file_stem(&m.method)
                ));
                let mut buf = Vec::new();
                roc.write_csv(&mut buf)?;
                fs::write(&path, buf)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
