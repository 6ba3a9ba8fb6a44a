//! Command-line entry point. Every command writes its outputs atomically
//! and leaves a JSON manifest with the resolved settings and file hashes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::domain::Label;
use crate::error::Error;
use crate::experiment::{build_batch, run_experiment, unit_config, Dataset, ExperimentConfig, GridSpec, ModelKind, SplitMode};
use crate::features::io::{read_bundle, read_features_csv, write_features_csv, FEATURES_FILE};
use crate::features::FeatureSchema;
use crate::introspect::importance_report;
use crate::labels::LABELS_FILE;
use crate::model::{make_variant, train, LabelPrediction, ModelBundle, ModelConfig, Preprocessor, TaskMode};
use crate::stats::compare_groups;
use crate::synth::{generate, self_check, CohortSpec};
use crate::util::{sha256_hex, sub_seed, write_atomic};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Data(String),
    Config(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Data(_) => "DataError",
            CliError::Config(_) => "ConfigError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Config(_) => EXIT_CONFIG,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Config(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.category(), self.message())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidVariant(_) | Error::InfeasibleSpec(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "shiftwell", version, about = "Next-day wellbeing forecasting for shift workers from wearable and survey data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a calibrated synthetic cohort (raw CSV bundle, labels, planted coefficients).
    Synth(SynthArgs),
    /// Extract daily feature vectors from a raw CSV bundle.
    Features(FeaturesArgs),
    /// Compare nurse and doctor feature distributions.
    Compare(CompareArgs),
    /// Train one model on a whole dataset and save it.
    Train(TrainArgs),
    /// Repeated train/test evaluation with grid search and significance tests.
    #[command(alias = "run")]
    Evaluate(EvaluateArgs),
    /// Predict the five wellbeing labels for every row of a features file.
    Predict(PredictArgs),
    /// Rank input features by first-layer convolution weights.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Cohort spec in TOML; defaults give the reference 14-person cohort.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the bundle even if the calibration self-check fails.
    #[arg(long)]
    pub skip_check: bool,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Directory holding hr.csv, steps.csv, sleep.csv, survey.csv and participants.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// Output file; defaults to features.csv inside the data directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Output directory for compare.csv and compare.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory with features.csv (or a raw bundle) and labels.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// mtml, mt, ml, ml-n, ml-d or nn.
    #[arg(long, default_value = "mtml")]
    pub variant: String,
    /// binary, three or regression.
    #[arg(long, default_value = "regression")]
    pub task: String,
    /// Model config in TOML; every field of the network and optimizer.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model container to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated: mtml, mt, ml, ml-n, ml-d, nn, baseline.
    #[arg(long, default_value = "mtml,mt,ml,ml-n,ml-d,nn,baseline")]
    pub variants: String,
    /// Comma-separated: binary, three, regression.
    #[arg(long, default_value = "binary,three,regression")]
    pub tasks: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hyperparameter grid in TOML (`[[point]]` tables); a four-point default otherwise.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = crate::experiment::REPETITIONS)]
    pub repetitions: usize,
    #[arg(long, default_value_t = crate::experiment::FOLDS)]
    pub folds: usize,
    /// Split unit: row (participant-days) or participant.
    #[arg(long, default_value = "row")]
    pub split: String,
    /// Output directory for metrics.csv, significance.csv and logs/.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// predictions.csv to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Importance report CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn artifact(path: &Path) -> CliResult<Artifact> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(Artifact {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

fn existing(paths: &[PathBuf]) -> CliResult<Vec<Artifact>> {
    paths.iter().filter(|p| p.is_file()).map(|p| artifact(p)).collect()
}

fn need_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} does not exist or is not a file", path.display())))
    }
}

fn need_dir(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} does not exist or is not a directory", path.display())))
    }
}

struct Outcome {
    config: serde_json::Value,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
}

fn manifest_beside(file: &Path) -> PathBuf {
    let name = file.file_name().map_or("out".into(), |n| n.to_string_lossy().into_owned());
    file.with_file_name(format!("{name}.manifest.json"))
}

fn list_csv(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    v.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    v.sort();
    v
}

fn parse_list<T: std::str::FromStr<Err = Error>>(s: &str) -> CliResult<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(CliError::from))
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("empty list `{s}`")));
    }
    Ok(items)
}

fn synth(a: &SynthArgs) -> CliResult<Outcome> {
    let spec = match &a.spec {
        Some(p) => {
            need_file(p)?;
            CohortSpec::load(p)?
        }
        None => CohortSpec::default(),
    };
    let bundle = generate(&spec, a.seed)?;
    let report = if a.skip_check {
        crate::synth::calibration_report(&bundle, &spec)?
    } else {
        self_check(&bundle, &spec)?
    };
    let mut outputs = bundle.write(&a.out)?;
    let calib = a.out.join("calibration.txt");
    write_atomic(&calib, report.to_text().as_bytes())?;
    outputs.push(calib);
    Ok(Outcome {
        config: serde_json::to_value(&spec).unwrap_or_default(),
        seeds: BTreeMap::from([("master".into(), a.seed)]),
        inputs: a.spec.iter().cloned().collect(),
        outputs,
        manifest: a.out.join("manifest.json"),
    })
}

fn features(a: &FeaturesArgs) -> CliResult<Outcome> {
    need_dir(&a.data)?;
    let schema = FeatureSchema::default();
    let data = read_bundle(&a.data)?;
    let rows = data.all_daily_vectors(&schema)?;
    let mut buf = Vec::new();
    write_features_csv(&mut buf, &schema, &rows)?;
    let out = a.out.clone().unwrap_or_else(|| a.data.join(FEATURES_FILE));
    write_atomic(&out, &buf)?;
    let inputs = list_csv(&a.data).into_iter().filter(|p| *p != out).collect();
    Ok(Outcome {
        config: json!({ "schema_version": schema.version, "features": schema.names }),
        seeds: BTreeMap::new(),
        inputs,
        manifest: manifest_beside(&out),
        outputs: vec![out],
    })
}

fn compare(a: &CompareArgs) -> CliResult<Outcome> {
    need_file(&a.features)?;
    let schema = FeatureSchema::default();
    let rows = read_features_csv(&a.features, &schema)?;
    let report = compare_groups(&rows, &schema)?;
    let csv_path = a.out.join("compare.csv");
    let txt_path = a.out.join("compare.txt");
    write_atomic(&csv_path, &report.to_csv()?)?;
    write_atomic(&txt_path, report.to_text().as_bytes())?;
    Ok(Outcome {
        config: json!({}),
        seeds: BTreeMap::new(),
        inputs: vec![a.features.clone()],
        outputs: vec![csv_path, txt_path],
        manifest: a.out.join("manifest.json"),
    })
}

fn train_cmd(a: &TrainArgs) -> CliResult<Outcome> {
    need_dir(&a.data)?;
    let kind: ModelKind = a.variant.parse()?;
    let variant = kind
        .variant()
        .ok_or_else(|| CliError::Config("the baseline has no model to train".into()))?;
    let task: TaskMode = a.task.parse()?;
    let ds = Dataset::load(&a.data)?;
    let idx: Vec<usize> = (0..ds.len())
        .filter(|&i| kind.role_filter().is_none_or(|r| ds.rows[i].role == r))
        .collect();
    if idx.is_empty() {
        return Err(CliError::Data(format!("no rows for variant {kind}")));
    }
    let rows: Vec<_> = idx.iter().map(|&i| ds.rows[i].clone()).collect();
    let pre = Preprocessor::fit(&rows, &ds.schema)?;
    let batch = build_batch(&ds, &idx, &pre, task)?;
    let file_cfg = match &a.config {
        Some(p) => {
            need_file(p)?;
            Some(ModelConfig::load(p)?)
        }
        None => None,
    };
    let units: Vec<Option<Label>> = if variant.multilabel() {
        vec![None]
    } else {
        Label::ALL.iter().map(|l| Some(*l)).collect()
    };
    let mut networks = Vec::new();
    let mut seeds = BTreeMap::from([("master".to_string(), a.seed)]);
    let mut configs = Vec::new();
    for unit in units {
        let mut cfg = match &file_cfg {
            Some(c) => {
                if c.variant != variant || c.task != task {
                    return Err(CliError::Config(format!(
                        "config is for {} {}, command asks for {} {}",
                        c.variant.as_str(),
                        c.task.as_str(),
                        variant.as_str(),
                        task.as_str()
                    )));
                }
                match unit {
                    Some(l) => c.clone().with_label(l),
                    None => c.clone(),
                }
            }
            None => unit_config(ds.schema.len(), variant, task, unit, &batch),
        };
        if cfg.n_features != ds.schema.len() {
            return Err(CliError::Config(format!(
                "config expects {} features, data has {}",
                cfg.n_features,
                ds.schema.len()
            )));
        }
        if let Some(e) = a.epochs {
            cfg.train.epochs = e;
        }
        let name = format!("train/{}", unit.map_or("all".to_string(), |l| l.to_string()));
        cfg.train.seed = sub_seed(a.seed, &name);
        seeds.insert(name, cfg.train.seed);
        cfg.validate()?;
        let mut net = make_variant(&cfg)?;
        train(&mut net, &batch, None)?;
        configs.push(serde_json::to_value(&cfg).unwrap_or_default());
        networks.push(net);
    }
    let bundle = ModelBundle {
        features: ds.schema.names.clone(),
        preprocessor: pre,
        networks,
    };
    bundle.save(&a.out)?;
    let mut inputs = vec![a.data.join(FEATURES_FILE), a.data.join(LABELS_FILE)];
    inputs.extend(a.config.iter().cloned());
    Ok(Outcome {
        config: json!({ "variant": kind.as_str(), "task": task.as_str(), "networks": configs }),
        seeds,
        inputs,
        manifest: manifest_beside(&a.out),
        outputs: vec![a.out.clone()],
    })
}

fn evaluate(a: &EvaluateArgs) -> CliResult<Outcome> {
    need_dir(&a.data)?;
    let grid = match &a.grid {
        Some(p) => {
            need_file(p)?;
            GridSpec::load(p)?
        }
        None => GridSpec::default(),
    };
    let split = match a.split.as_str() {
        "row" => SplitMode::Row,
        "participant" => SplitMode::Participant,
        other => return Err(CliError::Config(format!("unknown split `{other}` (row, participant)"))),
    };
    let config = ExperimentConfig {
        kinds: parse_list(&a.variants)?,
        tasks: parse_list(&a.tasks)?,
        grid,
        seed: a.seed,
        split,
        repetitions: a.repetitions,
        folds: a.folds,
    };
    let ds = Dataset::load(&a.data)?;
    let report = run_experiment(&ds, &config)?;
    let outputs = report.write(&a.out)?;
    let mut inputs = vec![a.data.join(FEATURES_FILE), a.data.join(LABELS_FILE)];
    inputs.extend(a.grid.iter().cloned());
    Ok(Outcome {
        config: json!({
            "variants": config.kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>(),
            "tasks": config.tasks.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
            "grid": serde_json::to_value(&config.grid).unwrap_or_default(),
            "repetitions": config.repetitions,
            "folds": config.folds,
            "split": a.split,
        }),
        seeds: BTreeMap::from([("master".into(), a.seed)]),
        inputs,
        outputs,
        manifest: a.out.join("manifest.json"),
    })
}

fn load_model_and_rows(model: &Path, features: &Path) -> CliResult<(ModelBundle, Vec<crate::features::DailyFeatureVector>)> {
    need_file(model)?;
    need_file(features)?;
    let bundle = ModelBundle::load(model)?;
    let rows = read_features_csv(features, &bundle.schema())?;
    Ok((bundle, rows))
}

fn predict_cmd(a: &PredictArgs) -> CliResult<Outcome> {
    let (bundle, rows) = load_model_and_rows(&a.model, &a.features)?;
    let preds = bundle.predict_rows(&rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["participant_id".to_string(), "date".into(), "role".into()];
    if let Some(first) = preds.first() {
        for (l, p) in first {
            header.push(l.to_string());
            if let LabelPrediction::Class { probabilities, .. } = p {
                header.extend((0..probabilities.len()).map(|c| format!("{l}_p{c}")));
            }
        }
    }
    w.write_record(&header).map_err(Error::from)?;
    for (row, p) in rows.iter().zip(&preds) {
        let mut rec = vec![row.participant_id.clone(), row.date.to_string(), row.role.to_string()];
        for (_, lp) in p {
            match lp {
                LabelPrediction::Value(v) => rec.push(crate::util::fmt_num(*v)),
                LabelPrediction::Class { class, probabilities } => {
                    rec.push(class.to_string());
                    rec.extend(probabilities.iter().map(|v| crate::util::fmt_num(*v)));
                }
            }
        }
        w.write_record(&rec).map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    write_atomic(&a.out, &bytes)?;
    Ok(Outcome {
        config: json!({}),
        seeds: BTreeMap::new(),
        inputs: vec![a.model.clone(), a.features.clone()],
        manifest: manifest_beside(&a.out),
        outputs: vec![a.out.clone()],
    })
}

fn analyze(a: &AnalyzeArgs) -> CliResult<Outcome> {
    let (bundle, rows) = load_model_and_rows(&a.model, &a.features)?;
    let net = bundle
        .networks
        .first()
        .ok_or_else(|| CliError::Data("model container holds no networks".into()))?;
    let x = bundle.preprocessor.transform(&rows)?;
    let report = importance_report(net, &bundle.features, &x)?;
    write_atomic(&a.out, report.to_csv().as_bytes())?;
    Ok(Outcome {
        config: json!({ "threshold": report.correlation.threshold }),
        seeds: BTreeMap::new(),
        inputs: vec![a.model.clone(), a.features.clone()],
        manifest: manifest_beside(&a.out),
        outputs: vec![a.out.clone()],
    })
}

fn dispatch(cli: &Cli, argv: Vec<String>) -> CliResult<PathBuf> {
    let started = now();
    let (name, outcome) = match &cli.command {
        Command::Synth(a) => ("synth", synth(a)?),
        Command::Features(a) => ("features", features(a)?),
        Command::Compare(a) => ("compare", compare(a)?),
        Command::Train(a) => ("train", train_cmd(a)?),
        Command::Evaluate(a) => ("evaluate", evaluate(a)?),
        Command::Predict(a) => ("predict", predict_cmd(a)?),
        Command::Analyze(a) => ("analyze", analyze(a)?),
    };
    let manifest = RunManifest {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv,
        config: outcome.config,
        seeds: outcome.seeds,
        inputs: existing(&outcome.inputs)?,
        outputs: existing(&outcome.outputs)?,
        started_unix: started,
        finished_unix: now(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
    write_atomic(&outcome.manifest, text.as_bytes())?;
    Ok(outcome.manifest)
}

/// Parses and runs one command; returns the manifest path.
pub fn run<I, T>(args: I) -> CliResult<PathBuf>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    dispatch(&cli, argv)
}

/// Process entry: help and version go to stdout with status 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match Cli::try_parse_from(args.clone()) {
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            0
        }
        Err(e) => {
            eprint!("UsageError: {e}");
            EXIT_USAGE
        }
        Ok(cli) => {
            let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
            match dispatch(&cli, argv) {
                Ok(_) => 0,
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        }
    }
}
