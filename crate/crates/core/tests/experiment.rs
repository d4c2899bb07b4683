use std::fs;
use std::path::Path;

use meboost::experiment::{self, ExperimentConfig};
use meboost::{Class, Dataset, Error, MeBoostConfig};

fn data_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/keel"))
}

fn config(extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
base_seed = 3

[split]
repeats = 2

[[datasets]]
name = "glass6"
path = "glass6.dat"

[[datasets]]
name = "new-thyroid2"
path = "new-thyroid2.dat"

[[methods]]
algorithm = "meboost"

[[methods]]
algorithm = "smoteboost"
{extra}
"#
    );
    ExperimentConfig::from_toml_str(&text).unwrap()
}

#[test]
fn small_protocol_run() {
    let cfg = config("");
    let report = experiment::run_experiment(&cfg, data_dir(), 2).unwrap();
    assert_eq!(report.datasets.len(), 2);
    for d in &report.datasets {
        assert!(d.error.is_none());
        assert_eq!(d.methods.len(), 2);
        for m in &d.methods {
            assert_eq!(m.scores.len(), 10, "{} {}", d.name, m.method);
            assert_eq!(m.n_failed, 0);
            let mean = m.scores.iter().sum::<f64>() / m.scores.len() as f64;
            assert!((m.mean_auroc.unwrap() - mean).abs() <= 1e-12);
            assert!(m.scores.iter().all(|s| (0.0..=1.0).contains(s)));
            for run in &m.runs {
                assert!(run.ensemble_len >= 1);
                assert!(run.rounds_trained - run.best_round <= 10);
            }
            let (r, f) = m.roc_run.unwrap();
            let best = m
                .runs
                .iter()
                .find(|x| x.repeat == r && x.fold == f)
                .unwrap();
            let max = m.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(best.validation_auroc, Some(max));
            assert_eq!(m.roc.as_ref().unwrap().area(), max);
        }
    }
    assert!(report.mean("glass6", "meboost").unwrap() > 0.8);

    let table = experiment::render_table(&report);
    assert_eq!(table.lines().count(), 4);
    assert!(table.lines().next().unwrap().contains("smoteboost"));
}

#[test]
fn base_seed_moves_folds_not_summaries() {
    let a = config("");
    let mut b = a.clone();
    b.base_seed = 4;
    a.split.validate().unwrap();
    let ra = experiment::run_experiment(&a, data_dir(), 1).unwrap();
    let rb = experiment::run_experiment(&b, data_dir(), 1).unwrap();
    for (x, y) in ra.datasets.iter().zip(&rb.datasets) {
        assert_eq!(x.summary, y.summary);
    }
    assert_ne!(
        ra.datasets[0].methods[0].scores,
        rb.datasets[0].methods[0].scores
    );
}

#[test]
fn failing_dataset_is_recorded() {
    let mut cfg = config("");
    cfg.datasets[1].path = "missing.dat".into();
    let report = experiment::run_experiment(&cfg, data_dir(), 1).unwrap();
    assert!(report.datasets[0].error.is_none());
    let err = report.datasets[1].error.as_deref().unwrap();
    assert!(err.contains("missing.dat"), "{err}");
    assert!(report.datasets[1].methods.is_empty());
    assert!(experiment::render_table(&report).contains("error"));
}

#[test]
fn outputs_stay_in_output_directory() {
    let mut cfg = config("");
    cfg.split.repeats = 1;
    cfg.datasets.truncate(1);
    let report = experiment::run_experiment(&cfg, data_dir(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let written = experiment::write_outputs(&report, &out).unwrap();
    assert_eq!(written.len(), 4);
    for p in &written {
        assert!(p.starts_with(&out), "{}", p.display());
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("dataset,method,mean_auroc,std_auroc,n_runs,n_failed")
    );
    assert!(lines.next().unwrap().starts_with("glass6,meboost,"));
    let roc = fs::read_to_string(out.join("roc/glass6__meboost.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr\n0,0\n"));
    assert!(roc.trim_end().ends_with("1,1"));
    let json = fs::read_to_string(out.join("report.json")).unwrap();
    let back: experiment::ExperimentReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_json().unwrap(), json);
}

#[test]
fn csv_source_in_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("a,b,label\n");
    for i in 0..60 {
        let label = if i % 4 == 0 { "yes" } else { "no" };
        text.push_str(&format!("{},{},{label}\n", i % 7, (i * 5) % 11));
    }
    fs::write(dir.path().join("toy.csv"), text).unwrap();
    let cfg = ExperimentConfig::from_toml_str(
        r#"
[split]
validation_fraction = 0.1
folds = 3
repeats = 1

[[datasets]]
name = "toy"
path = "toy.csv"
format = "csv"
label_column = "label"
positive_label = "yes"

[[methods]]
algorithm = "adaboost-et"
"#,
    )
    .unwrap();
    let report = experiment::run_experiment(&cfg, dir.path(), 1).unwrap();
    let summary = report.datasets[0].summary.as_ref().unwrap();
    assert_eq!((summary.n_instances, summary.n_minority), (60, 15));
    assert_eq!(report.datasets[0].methods[0].scores.len(), 3);
}

#[test]
fn indistinguishable_rows_yield_no_weak_learner() {
    // Every tree is a single leaf with error exactly one half.
    let rows = vec![vec![1.0, 2.0]; 8];
    let labels = (0..8)
        .map(|i| {
            if i % 2 == 0 {
                Class::Positive
            } else {
                Class::Negative
            }
        })
        .collect();
    let d = Dataset::from_unnamed(rows, labels).unwrap();
    let err = meboost::meboost::train_meboost(&d, &d, &MeBoostConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NoWeakLearner));
    assert_eq!(err.to_string(), "no weak learner found");
}
