use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use meboost::data::{self, LabelColumn};
use meboost::experiment::{self, Algorithm, ExperimentConfig};
use meboost::meboost::TreeParams;
use meboost::{Dataset, EnsembleModel, MeBoostConfig, SamplerConfig};

#[derive(Parser)]
#[command(
    name = "meboost",
    version,
    about = "Boosting for imbalanced binary classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print instance, feature and class counts of a dataset.
    Inspect {
        #[command(flatten)]
        input: Input,
        /// Emit a JSON object instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Train one model with early stopping on a stratified holdout.
    Train(TrainArgs),
    /// Run the cross-validation benchmark described by a TOML config.
    Bench {
        config: PathBuf,
        #[arg(long, env = "MEBOOST_OUT_DIR", default_value = "meboost-out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Score a dataset with a saved model and emit its ROC curve as CSV.
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        /// Write the curve here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Keel,
    Csv,
}

#[derive(Args)]
struct Input {
    dataset: PathBuf,
    /// Defaults to csv for `.csv` files, keel otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// CSV label column: header name or zero-based index.
    #[arg(long, default_value = "class")]
    label_column: String,
    /// CSV label value of the positive class.
    #[arg(long)]
    positive_label: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value = "meboost", value_parser = parse_algorithm)]
    method: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, default_value_t = 200)]
    max_rounds: usize,
    #[arg(long, default_value_t = 8)]
    max_depth: usize,
    /// Stratified share of the data used for early stopping.
    #[arg(long, default_value_t = 0.2)]
    holdout_fraction: f64,
    /// Majority:minority ratio for rusboost and smoteboost.
    #[arg(long, default_value_t = 1.0)]
    target_ratio: f64,
    #[arg(long, default_value_t = 5)]
    smote_k: usize,
    #[arg(long)]
    scale_features: bool,
    #[arg(long, env = "MEBOOST_OUT_DIR", default_value = "meboost-out")]
    out: PathBuf,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: meboost::Error| e.to_string())
}

/// An error plus the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(error: E) -> Self {
        Failure {
            code: 1,
            error: error.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Inspect { input, json } => inspect(&input, json),
        Command::Train(args) => train(&args),
        Command::Bench { config, out, jobs } => bench(&config, &out, jobs),
        Command::Roc { model, input, out } => roc(&model, &input, out.as_deref()),
    }
}

fn load(input: &Input) -> Result<Dataset, Failure> {
    let path = &input.dataset;
    let file = fs::File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(usage)?;
    let format = input
        .format
        .unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Keel,
        });
    let parsed = match format {
        Format::Keel => data::parse_keel(BufReader::new(file)),
        Format::Csv => {
            let positive = input
                .positive_label
                .as_deref()
                .ok_or_else(|| usage(anyhow!("csv input needs --positive-label")))?;
            let column: LabelColumn = input.label_column.parse().expect("infallible");
            data::parse_csv(file, &column, positive)
        }
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parsed
        .with_context(|| format!("cannot parse {}", path.display()))?
        .with_name(name))
}

fn inspect(input: &Input, as_json: bool) -> Result<(), Failure> {
    let d = load(input)?;
    let s = data::summarize(&d)?;
    if as_json {
        let value = json!({
            "name": d.name(),
            "n_instances": s.n_instances,
            "n_features": s.n_features,
            "n_minority": s.n_minority,
            "n_majority": s.n_majority,
            "imbalance_ratio": s.imbalance_ratio,
            "positive_class": d.positive_class_name(),
            "negative_class": d.negative_class_name(),
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        println!(
            "{} instances, {} features, IR {:.2}",
            s.n_instances, s.n_features, s.imbalance_ratio
        );
        println!(
            "positive {:?}: {}, negative {:?}: {}",
            d.positive_class_name(),
            s.n_minority,
            d.negative_class_name(),
            s.n_majority
        );
    }
    Ok(())
}

fn train(args: &TrainArgs) -> Result<(), Failure> {
    let d = load(&args.input)?;
    let cfg = MeBoostConfig {
        window: args.window,
        max_rounds: args.max_rounds,
        seed: args.seed,
        tree: TreeParams {
            max_depth: args.max_depth,
            ..TreeParams::default()
        },
        ..MeBoostConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let sampler = SamplerConfig {
        target_ratio: args.target_ratio,
        smote_k: args.smote_k,
        scale_features: args.scale_features,
        seed: args.seed,
        ..SamplerConfig::default()
    };
    sampler.validate().map_err(usage)?;
    if !(args.holdout_fraction > 0.0 && args.holdout_fraction < 1.0) {
        return Err(usage(anyhow!("--holdout-fraction must lie in (0, 1)")));
    }

    let (fit, holdout) = data::stratified_holdout(&d, args.holdout_fraction, args.seed)?;
    let result = args.method.train(&fit, &holdout, &cfg, &sampler)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let model_path = args.out.join("model.json");
    let document = json!({
        "provenance": {
            "method": args.method.as_str(),
            "dataset": d.name(),
            "seed": args.seed,
            "holdout_fraction": args.holdout_fraction,
            "boost": cfg,
            "sampler": sampler,
        },
        "best_holdout_auroc": result.best_score,
        "best_round": result.best_round,
        "rounds_trained": result.rounds_trained,
        "model": result.best_model,
    });
    fs::write(&model_path, serde_json::to_string_pretty(&document)? + "\n")?;
    let trajectory_path = args.out.join("trajectory.csv");
    let mut buf = Vec::new();
    result.write_trajectory_csv(&mut buf)?;
    fs::write(&trajectory_path, buf)?;

    println!(
        "method {} seed {} window {}",
        args.method, args.seed, cfg.window
    );
    println!("best holdout auROC {:.4}", result.best_score);
    println!(
        "rounds_trained {} (best at round {}, {} learners kept)",
        result.rounds_trained,
        result.best_round,
        result.best_model.len()
    );
    println!(
        "wrote {} and {}",
        model_path.display(),
        trajectory_path.display()
    );
    Ok(())
}

fn bench(config: &Path, out: &Path, jobs: usize) -> Result<(), Failure> {
    let text = fs::read_to_string(config)
        .with_context(|| format!("cannot read {}", config.display()))
        .map_err(usage)?;
    let cfg = ExperimentConfig::from_toml_str(&text)
        .with_context(|| format!("invalid config {}", config.display()))
        .map_err(usage)?;
    let base_dir = config.parent().unwrap_or(Path::new("."));
    let report = experiment::run_experiment(&cfg, base_dir, jobs)?;
    experiment::write_outputs(&report, out)
        .with_context(|| format!("cannot write results under {}", out.display()))?;

    print!("{}", experiment::render_table(&report));
    for d in &report.datasets {
        if let Some(e) = &d.error {
            eprintln!("dataset {} failed: {e}", d.name);
        }
        for m in &d.methods {
            if m.n_failed > 0 {
                eprintln!(
                    "{} / {}: {} of {} runs failed",
                    d.name,
                    m.method,
                    m.n_failed,
                    m.runs.len()
                );
            }
        }
    }
    println!("results written to {}", out.display());
    if report.datasets.iter().all(|d| d.error.is_some()) {
        return Err(anyhow!("every dataset failed").into());
    }
    Ok(())
}

fn roc(model_path: &Path, input: &Input, out: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(model_path)
        .with_context(|| format!("cannot read {}", model_path.display()))
        .map_err(usage)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not JSON", model_path.display()))?;
    // Accept both the file written by `train` and a bare ensemble.
    let model: EnsembleModel = match value.get("model") {
        Some(inner) => serde_json::from_value(inner.clone()),
        None => serde_json::from_value(value),
    }
    .with_context(|| format!("{} does not hold a model", model_path.display()))?;

    let d = load(input)?;
    let scores = model.score_dataset(&d)?;
    let curve = meboost::roc_curve(&scores, d.labels())?;
    let auc = meboost::auroc(&scores, d.labels())?;
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            fs::write(path, buf).with_context(|| format!("cannot write {}", path.display()))?;
            println!("auROC {auc:.6}");
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            curve.write_csv(&mut lock)?;
            lock.flush()?;
            eprintln!("auROC {auc:.6}");
        }
    }
    Ok(())
}
