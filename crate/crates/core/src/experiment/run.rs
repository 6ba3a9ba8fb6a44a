use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::dataset::Dataset;
use super::grid::{grid_search, GridSpec};
use super::metrics::{discretize, f1_score, mae, LabelView};
use super::split::{make_participant_split_plan_sized, make_split_plan_sized, SplitMode, SplitPlan, FOLDS, REPETITIONS};
use crate::domain::{Label, Role};
use crate::error::{Error, Result};
use crate::model::{inverse_frequency_alpha, make_variant, predict, train, Batch, ModelConfig, Preprocessor, TaskMode, Variant};
use crate::stats::descriptive::{mean, sample_sd};
use crate::stats::{anova_tukey, GroupSample};
use crate::util::{fmt_num, sub_seed, write_atomic};

/// A row of the comparison: a network variant, a role-restricted ML model,
/// or the training-statistics baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Mtml,
    Mt,
    Ml,
    /// ML trained and tested on nurse rows only.
    MlNurse,
    /// ML trained and tested on doctor rows only.
    MlDoctor,
    Nn,
    /// Training mean (regression) or majority class.
    Baseline,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Mtml,
        ModelKind::Mt,
        ModelKind::Ml,
        ModelKind::MlNurse,
        ModelKind::MlDoctor,
        ModelKind::Nn,
        ModelKind::Baseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mtml => "mtml",
            ModelKind::Mt => "mt",
            ModelKind::Ml => "ml",
            ModelKind::MlNurse => "ml-n",
            ModelKind::MlDoctor => "ml-d",
            ModelKind::Nn => "nn",
            ModelKind::Baseline => "baseline",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            ModelKind::Mtml => Some(Variant::Mtml),
            ModelKind::Mt => Some(Variant::Mt),
            ModelKind::Ml | ModelKind::MlNurse | ModelKind::MlDoctor => Some(Variant::Ml),
            ModelKind::Nn => Some(Variant::Nn),
            ModelKind::Baseline => None,
        }
    }

    pub fn role_filter(self) -> Option<Role> {
        match self {
            ModelKind::MlNurse => Some(Role::Nurse),
            ModelKind::MlDoctor => Some(Role::Doctor),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        match t.as_str() {
            "ml-n" | "ml-nurse" => Ok(ModelKind::MlNurse),
            "ml-d" | "ml-doctor" => Ok(ModelKind::MlDoctor),
            "baseline" | "mean" | "majority" => Ok(ModelKind::Baseline),
            _ => match t.parse::<Variant>()? {
                Variant::Mtml => Ok(ModelKind::Mtml),
                Variant::Mt => Ok(ModelKind::Mt),
                Variant::Ml => Ok(ModelKind::Ml),
                Variant::Nn => Ok(ModelKind::Nn),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kinds: Vec<ModelKind>,
    pub tasks: Vec<TaskMode>,
    pub grid: GridSpec,
    pub seed: u64,
    pub split: SplitMode,
    pub repetitions: usize,
    pub folds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kinds: ModelKind::ALL.to_vec(),
            tasks: TaskMode::ALL.to_vec(),
            grid: GridSpec::default(),
            seed: 0,
            split: SplitMode::Row,
            repetitions: REPETITIONS,
            folds: FOLDS,
        }
    }
}

/// Outcome of one model on one label in one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionRecord {
    pub repetition: usize,
    pub kind: ModelKind,
    pub task: TaskMode,
    pub label: Label,
    pub grid_point: Option<usize>,
    pub cv_loss: Option<f64>,
    pub final_epochs: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
    /// Macro f1 or MAE.
    pub metric: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub kind: ModelKind,
    pub task: TaskMode,
    pub label: Label,
    pub metric: &'static str,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub task: TaskMode,
    pub label: Label,
    pub f: f64,
    pub anova_p: f64,
    pub a: ModelKind,
    pub b: ModelKind,
    /// mean(a) - mean(b).
    pub mean_diff: f64,
    pub tukey_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub rows: Vec<MetricRow>,
    pub significance: Vec<SignificanceRow>,
    pub records: Vec<RepetitionRecord>,
}

fn metric_name(task: TaskMode) -> &'static str {
    if task.is_classification() {
        "f1"
    } else {
        "mae"
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";")
}

impl MetricsReport {
    pub fn get(&self, kind: ModelKind, task: TaskMode, label: Label) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.task == task && r.label == label)
    }

    /// Mean of the per-label means for one model and task.
    pub fn mean_over_labels(&self, kind: ModelKind, task: TaskMode) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.kind == kind && r.task == task)
            .map(|r| r.mean)
            .collect();
        mean(&v)
    }

    pub fn metrics_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["variant", "task", "label", "metric", "n", "mean", "sd", "precision", "recall"])?;
        for r in &self.rows {
            w.write_record([
                r.kind.as_str(),
                r.task.as_str(),
                r.label.as_str(),
                r.metric,
                &r.n.to_string(),
                &fmt_num(r.mean),
                &fmt_num(r.sd),
                &join(&r.precision),
                &join(&r.recall),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn significance_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task", "label", "anova_f", "anova_p", "variant_a", "variant_b", "mean_diff", "tukey_p"])?;
        for s in &self.significance {
            w.write_record([
                s.task.as_str(),
                s.label.as_str(),
                &fmt_num(s.f),
                &fmt_num(s.anova_p),
                s.a.as_str(),
                s.b.as_str(),
                &fmt_num(s.mean_diff),
                &fmt_num(s.tukey_p),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn repetitions_csv(&self, repetition: Option<usize>) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "repetition", "variant", "task", "label", "grid_point", "cv_loss", "final_epochs", "n_train", "n_test",
            "metric", "precision", "recall",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in self.records.iter().filter(|r| repetition.is_none_or(|k| r.repetition == k)) {
            w.write_record([
                r.repetition.to_string(),
                r.kind.to_string(),
                r.task.as_str().to_string(),
                r.label.to_string(),
                opt(r.grid_point.map(|p| p.to_string())),
                opt(r.cv_loss.map(fmt_num)),
                opt(r.final_epochs.map(|e| e.to_string())),
                r.n_train.to_string(),
                r.n_test.to_string(),
                fmt_num(r.metric),
                join(&r.precision),
                join(&r.recall),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// Writes `metrics.csv`, `significance.csv` and `logs/rep_XX.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let metrics = dir.join("metrics.csv");
        write_atomic(&metrics, &self.metrics_csv()?)?;
        out.push(metrics);
        let sig = dir.join("significance.csv");
        write_atomic(&sig, &self.significance_csv()?)?;
        out.push(sig);
        let mut reps: Vec<usize> = self.records.iter().map(|r| r.repetition).collect();
        reps.sort_unstable();
        reps.dedup();
        for r in reps {
            let p = dir.join("logs").join(format!("rep_{r:02}.csv"));
            write_atomic(&p, &self.repetitions_csv(Some(r))?)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Model-ready rows: preprocessed features plus targets in the task's units
/// (raw scores for regression, class indices otherwise).
pub fn build_batch(dataset: &Dataset, idx: &[usize], pre: &Preprocessor, task: TaskMode) -> Result<Batch> {
    let rows: Vec<_> = idx.iter().map(|&i| dataset.rows[i].clone()).collect();
    let x = pre.transform(&rows)?;
    let roles = idx.iter().map(|&i| dataset.rows[i].role).collect();
    let view = LabelView::from_task(task);
    let targets = idx
        .iter()
        .map(|&i| {
            let raw = dataset.labels[i].0;
            let mut t = [0.0; Label::COUNT];
            for (k, v) in raw.iter().enumerate() {
                t[k] = match view {
                    Some(view) => discretize(*v, view)? as f64,
                    None => *v,
                };
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Batch::new(x, roles, targets)
}

/// Model configuration for one unit with focal weights from its training rows.
pub fn unit_config(n_features: usize, variant: Variant, task: TaskMode, label: Option<Label>, train: &Batch) -> ModelConfig {
    let mut cfg = ModelConfig::new(n_features, variant, task);
    if let Some(l) = label {
        cfg = cfg.with_label(l);
    }
    if let Some(k) = task.n_classes() {
        cfg.focal_alpha = inverse_frequency_alpha(&train.targets, &cfg.labels, k);
    }
    cfg
}

fn score(task: TaskMode, truth: &[f64], pred: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    match task.n_classes() {
        None => Ok((mae(truth, pred)?, Vec::new(), Vec::new())),
        Some(k) => {
            let t: Vec<usize> = truth.iter().map(|v| *v as usize).collect();
            let p: Vec<usize> = pred.iter().map(|v| *v as usize).collect();
            let r = f1_score(&t, &p, k)?;
            Ok((r.macro_f1, r.precision, r.recall))
        }
    }
}

fn baseline_prediction(task: TaskMode, train: &[f64]) -> f64 {
    match task.n_classes() {
        None => mean(train).unwrap_or(0.0),
        Some(k) => {
            let mut counts = vec![0usize; k];
            for v in train {
                counts[*v as usize] += 1;
            }
            let mut best = 0;
            for c in 1..k {
                if counts[c] > counts[best] {
                    best = c;
                }
            }
            best as f64
        }
    }
}

pub fn split_plan(dataset: &Dataset, config: &ExperimentConfig) -> Result<SplitPlan> {
    match config.split {
        SplitMode::Row => make_split_plan_sized(dataset.len(), config.seed, config.repetitions, config.folds),
        SplitMode::Participant => make_participant_split_plan_sized(
            &dataset.participants(),
            config.seed,
            config.repetitions,
            config.folds,
        ),
    }
}

/// Repeated split, grid search, refit and test for every model and task,
/// then per-label ANOVA with Tukey HSD across models.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Result<MetricsReport> {
    run_experiment_with(dataset, config, &mut |_| {})
}

pub fn run_experiment_with(
    dataset: &Dataset,
    config: &ExperimentConfig,
    progress: &mut dyn FnMut(&RepetitionRecord),
) -> Result<MetricsReport> {
    config.grid.validate()?;
    if config.kinds.is_empty() || config.tasks.is_empty() {
        return Err(Error::Config("no variants or tasks selected".into()));
    }
    for kind in &config.kinds {
        let needed: Vec<Role> = match (kind.variant(), kind.role_filter()) {
            (_, Some(r)) => vec![r],
            (Some(v), None) if v.branched() => Role::ALL.to_vec(),
            _ => Vec::new(),
        };
        for r in needed {
            if !dataset.has_role(r) {
                return Err(Error::SingleGroup(format!("{kind} needs {r} rows")));
            }
        }
    }
    let plan = split_plan(dataset, config)?;
    let n_features = dataset.schema.len();
    let mut records = Vec::new();

    for (r, rep) in plan.repetitions.iter().enumerate() {
        let mut prepared: BTreeMap<Option<Role>, (Vec<usize>, Vec<usize>, Vec<Vec<usize>>, Preprocessor)> = BTreeMap::new();
        for kind in &config.kinds {
            let filter = kind.role_filter();
            if prepared.contains_key(&filter) {
                continue;
            }
            let keep = |i: &usize| filter.is_none_or(|role| dataset.rows[*i].role == role);
            let train_idx: Vec<usize> = rep.train.iter().copied().filter(keep).collect();
            let test_idx: Vec<usize> = rep.test.iter().copied().filter(keep).collect();
            let pos: BTreeMap<usize, usize> = train_idx.iter().enumerate().map(|(p, i)| (*i, p)).collect();
            let folds: Vec<Vec<usize>> = rep
                .folds
                .iter()
                .map(|f| f.iter().filter_map(|i| pos.get(i).copied()).collect())
                .collect();
            let rows: Vec<_> = train_idx.iter().map(|&i| dataset.rows[i].clone()).collect();
            let pre = Preprocessor::fit(&rows, &dataset.schema)?;
            prepared.insert(filter, (train_idx, test_idx, folds, pre));
        }

        for &task in &config.tasks {
            for &kind in &config.kinds {
                let (train_idx, test_idx, folds, pre) = &prepared[&kind.role_filter()];
                if test_idx.is_empty() {
                    return Err(Error::TooSmall { needed: 1, got: 0 });
                }
                let train_b = build_batch(dataset, train_idx, pre, task)?;
                let test_b = build_batch(dataset, test_idx, pre, task)?;
                let truth = |l: Label| test_b.targets.iter().map(|t| t[l.index()]).collect::<Vec<f64>>();

                let Some(variant) = kind.variant() else {
                    for l in Label::ALL {
                        let train_vals: Vec<f64> = train_b.targets.iter().map(|t| t[l.index()]).collect();
                        let guess = baseline_prediction(task, &train_vals);
                        let (metric, precision, recall) = score(task, &truth(l), &vec![guess; test_b.len()])?;
                        let rec = RepetitionRecord {
                            repetition: r,
                            kind,
                            task,
                            label: l,
                            grid_point: None,
                            cv_loss: None,
                            final_epochs: None,
                            n_train: train_b.len(),
                            n_test: test_b.len(),
                            metric,
                            precision,
                            recall,
                        };
                        progress(&rec);
                        records.push(rec);
                    }
                    continue;
                };

                let units: Vec<Option<Label>> = if variant.multilabel() {
                    vec![None]
                } else {
                    Label::ALL.iter().map(|l| Some(*l)).collect()
                };
                for unit in units {
                    let unit_name = unit.map_or("all".to_string(), |l| l.to_string());
                    let tag = format!("{}/{}/{}", kind, task.as_str(), unit_name);
                    let base = unit_config(n_features, variant, task, unit, &train_b);
                    let gs = grid_search(&train_b, folds, &base, &config.grid, sub_seed(rep.seed, &format!("grid/{tag}")))?;
                    let mut cfg = config.grid.points[gs.best].apply(&base);
                    cfg.train.epochs = gs.final_epochs();
                    cfg.train.seed = sub_seed(rep.seed, &format!("final/{tag}"));
                    let mut net = make_variant(&cfg)?;
                    train(&mut net, &train_b, None)?;
                    let preds = predict(&net, &test_b.x, &test_b.roles)?;
                    for (h, &l) in net.labels().iter().enumerate() {
                        let p: Vec<f64> = preds.iter().map(|row| row[h].point()).collect();
                        let (metric, precision, recall) = score(task, &truth(l), &p)?;
                        let rec = RepetitionRecord {
                            repetition: r,
                            kind,
                            task,
                            label: l,
                            grid_point: Some(gs.best),
                            cv_loss: Some(gs.cv_loss[gs.best]),
                            final_epochs: Some(cfg.train.epochs),
                            n_train: train_b.len(),
                            n_test: test_b.len(),
                            metric,
                            precision,
                            recall,
                        };
                        progress(&rec);
                        records.push(rec);
                    }
                }
            }
        }
    }
    Ok(aggregate(config, records))
}

fn aggregate(config: &ExperimentConfig, records: Vec<RepetitionRecord>) -> MetricsReport {
    let mut rows = Vec::new();
    let mut significance = Vec::new();
    for &task in &config.tasks {
        for l in Label::ALL {
            let mut groups = Vec::new();
            for &kind in &config.kinds {
                let recs: Vec<&RepetitionRecord> = records
                    .iter()
                    .filter(|r| r.kind == kind && r.task == task && r.label == l)
                    .collect();
                let vals: Vec<f64> = recs.iter().map(|r| r.metric).collect();
                let avg = |f: &dyn Fn(&RepetitionRecord) -> &Vec<f64>| -> Vec<f64> {
                    let width = recs.first().map_or(0, |r| f(r).len());
                    (0..width)
                        .map(|c| recs.iter().map(|r| f(r)[c]).sum::<f64>() / recs.len() as f64)
                        .collect()
                };
                rows.push(MetricRow {
                    kind,
                    task,
                    label: l,
                    metric: metric_name(task),
                    n: vals.len(),
                    mean: mean(&vals).unwrap_or(f64::NAN),
                    sd: sample_sd(&vals).unwrap_or(0.0),
                    precision: avg(&|r| &r.precision),
                    recall: avg(&|r| &r.recall),
                });
                groups.push(GroupSample {
                    label: kind.to_string(),
                    values: vals,
                });
            }
            if let Ok(at) = anova_tukey(&groups) {
                for i in 0..groups.len() {
                    for j in i + 1..groups.len() {
                        significance.push(SignificanceRow {
                            task,
                            label: l,
                            f: at.f,
                            anova_p: at.p_value,
                            a: config.kinds[i],
                            b: config.kinds[j],
                            mean_diff: at.mean_diff[i][j],
                            tukey_p: at.pairwise_p[i][j],
                        });
                    }
                }
            }
        }
    }
    MetricsReport {
        rows,
        significance,
        records,
    }
}
