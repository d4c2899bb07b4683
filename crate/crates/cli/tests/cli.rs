use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn keel(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/keel")
        .join(format!("{name}.dat"))
}

fn meboost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meboost"))
        .args(args)
        .env_remove("MEBOOST_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inspect_pima() {
    let o = meboost(&["inspect", path_str(&keel("pima"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).lines().next(),
        Some("768 instances, 8 features, IR 1.87")
    );
    assert!(stdout(&o).contains("268"));
}

#[test]
fn inspect_json() {
    let o = meboost(&["inspect", "--json", path_str(&keel("glass5"))]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_instances"], 214);
    assert_eq!(v["n_features"], 9);
    assert_eq!(v["n_minority"], 9);
    assert_eq!(v["n_majority"], 205);
}

#[test]
fn inspect_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    fs::write(&path, "x,y\n1,a\n2,b\n3,b\n4,b\n").unwrap();
    let o = meboost(&[
        "inspect",
        "--label-column",
        "y",
        "--positive-label",
        "a",
        path_str(&path),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("4 instances, 1 features, IR 3.00"));
    let o = meboost(&["inspect", path_str(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--positive-label"));
}

#[test]
fn missing_file_is_usage_error() {
    let o = meboost(&["inspect", "/nonexistent/file.dat"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot open"));
}

#[test]
fn malformed_file_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dat");
    fs::write(
        &path,
        "@relation r\n@attribute a real\n@attribute c {p,n}\n@data\n1,p\nx,n\n",
    )
    .unwrap();
    let o = meboost(&["inspect", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));
}

#[test]
fn unknown_method_is_usage_error() {
    let o = meboost(&["train", "--method", "xgboost", path_str(&keel("glass6"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown method"));
}

#[test]
fn train_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = meboost(&[
            "train",
            "--method",
            "meboost",
            "--seed",
            "7",
            "--out",
            path_str(&out),
            path_str(&keel("new-thyroid1")),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("window 10"));
        assert!(text.contains("best holdout auROC"));
        assert!(text.contains("rounds_trained"));
        outputs.push((
            fs::read(out.join("model.json")).unwrap(),
            fs::read(out.join("trajectory.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let model: serde_json::Value = serde_json::from_slice(&outputs[0].0).unwrap();
    assert_eq!(model["provenance"]["boost"]["window"], 10);
    assert_eq!(model["provenance"]["method"], "meboost");
    let trajectory = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(trajectory.starts_with("round,kind,holdout_auroc\n1,decision_tree,"));

    let roc_path = dir.path().join("roc.csv");
    let o = meboost(&[
        "roc",
        "--model",
        path_str(&dir.path().join("a/model.json")),
        "--out",
        path_str(&roc_path),
        path_str(&keel("new-thyroid1")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("auROC "));
    let curve = fs::read_to_string(&roc_path).unwrap();
    assert!(curve.starts_with("fpr,tpr\n"));
}

#[test]
fn train_baselines() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["adaboost-dt", "adaboost-et", "rusboost", "smoteboost"] {
        let out = dir.path().join(method);
        let o = meboost(&[
            "train",
            "--method",
            method,
            "--out",
            path_str(&out),
            path_str(&keel("glass6")),
        ]);
        assert!(o.status.success(), "{method}: {}", stderr(&o));
        assert!(out.join("model.json").exists());
    }
}

#[test]
fn roc_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = meboost(&["train", "--out", path_str(&out), path_str(&keel("glass6"))]);
    assert!(o.status.success());
    let o = meboost(&[
        "roc",
        "--model",
        path_str(&out.join("model.json")),
        path_str(&keel("glass6")),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("fpr,tpr\n0,0\n"));
    assert!(text.trim_end().ends_with("1,1"));
    assert!(stderr(&o).starts_with("auROC "));
}

fn write_config(dir: &Path, datasets: &[(&str, PathBuf)], methods: &[&str]) -> PathBuf {
    let mut text = String::from("[split]\nrepeats = 1\n\n");
    for (name, path) in datasets {
        text.push_str(&format!(
            "[[datasets]]\nname = \"{name}\"\npath = \"{}\"\n\n",
            path.display()
        ));
    }
    if methods.is_empty() {
        text.insert_str(0, "methods = []\n");
    }
    for m in methods {
        text.push_str(&format!("[[methods]]\nalgorithm = \"{m}\"\n\n"));
    }
    let path = dir.join("bench.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bench_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &[
            ("glass6", keel("glass6")),
            ("new-thyroid2", keel("new-thyroid2")),
        ],
        &["meboost", "rusboost"],
    );
    let out = dir.path().join("out");
    let o = meboost(&[
        "bench",
        path_str(&config),
        "--out",
        path_str(&out),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("dataset"));
    assert!(table.contains("glass6"));
    assert!(table.contains('*'));
    for file in [
        "report.json",
        "summary.csv",
        "roc/glass6__meboost.csv",
        "roc/new-thyroid2__rusboost.csv",
    ] {
        assert!(out.join(file).exists(), "{file}");
    }
}

#[test]
fn bench_output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &[("glass6", keel("glass6"))], &["adaboost-dt"]);
    let out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_meboost"))
        .args(["bench", path_str(&config), "--jobs", "1"])
        .env("MEBOOST_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("report.json").exists());
}

#[test]
fn bench_partial_and_total_failure() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.dat");
    let config = write_config(
        dir.path(),
        &[("glass6", keel("glass6")), ("gone", missing.clone())],
        &["adaboost-et"],
    );
    let out = dir.path().join("partial");
    let o = meboost(&["bench", path_str(&config), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("dataset gone failed"));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["datasets"][1]["error"].is_string());

    let config = write_config(dir.path(), &[("gone", missing)], &["adaboost-et"]);
    let o = meboost(&[
        "bench",
        path_str(&config),
        "--out",
        path_str(&dir.path().join("none")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &[("glass6", keel("glass6"))], &[]);
    let o = meboost(&[
        "bench",
        path_str(&config),
        "--out",
        path_str(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("methods must not be empty"),
        "{}",
        stderr(&o)
    );
    assert!(!dir.path().join("x").exists());

    let o = meboost(&["bench", "/nonexistent.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn no_subcommand_is_usage_error() {
    assert_eq!(meboost(&[]).status.code(), Some(2));
}
