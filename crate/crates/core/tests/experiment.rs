use std::collections::BTreeSet;
use std::sync::OnceLock;

use shiftwell::experiment::*;
use shiftwell::features::FeatureSchema;
use shiftwell::model::{ModelConfig, Preprocessor, TaskMode, Variant};
use shiftwell::synth::{generate, CohortSpec};
use shiftwell::Label;

fn dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| {
        let schema = FeatureSchema::default();
        let bundle = generate(&CohortSpec::default(), 0).unwrap();
        Dataset::pair(schema.clone(), bundle.feature_rows(&schema).unwrap(), &bundle.labels).unwrap()
    })
}

fn point(lr: f64, epochs: usize) -> GridPoint {
    GridPoint {
        shared_widths: vec![8],
        branch_width: 4,
        learning_rate: lr,
        focal_gamma: 2.0,
        epochs,
        patience: 10,
        batch_size: 16,
    }
}

fn quick_config(kinds: Vec<ModelKind>, tasks: Vec<TaskMode>) -> ExperimentConfig {
    ExperimentConfig {
        kinds,
        tasks,
        grid: GridSpec::single(point(0.01, 15)),
        seed: 5,
        repetitions: 2,
        folds: 3,
        ..Default::default()
    }
}

#[test]
fn discretization_boundaries() {
    assert_eq!(discretize(50.0, LabelView::Binary).unwrap(), 0);
    assert_eq!(discretize(51.0, LabelView::Binary).unwrap(), 1);
    assert_eq!(discretize(33.0, LabelView::ThreeClass).unwrap(), 0);
    assert_eq!(discretize(34.0, LabelView::ThreeClass).unwrap(), 1);
    assert_eq!(discretize(66.0, LabelView::ThreeClass).unwrap(), 1);
    assert_eq!(discretize(67.0, LabelView::ThreeClass).unwrap(), 2);
    assert_eq!(discretize(0.0, LabelView::Binary).unwrap(), 0);
    assert_eq!(discretize(0.0, LabelView::ThreeClass).unwrap(), 0);
}

#[test]
fn split_plans_partition_rows() {
    let plan = make_split_plan(100, 1).unwrap();
    assert_eq!(plan.repetitions.len(), REPETITIONS);
    assert!(plan.repetitions.iter().all(|r| r.test.len() == 20));
    assert_eq!(plan, make_split_plan(100, 1).unwrap());
    for seed in 0..10 {
        for rep in make_split_plan(241, seed).unwrap().repetitions {
            let train: BTreeSet<usize> = rep.train.iter().copied().collect();
            let test: BTreeSet<usize> = rep.test.iter().copied().collect();
            assert!(train.is_disjoint(&test));
            assert_eq!(train.len() + test.len(), 241);
            let folded: Vec<usize> = rep.folds.concat();
            assert_eq!(folded.iter().copied().collect::<BTreeSet<_>>(), train);
            assert_eq!(folded.len(), train.len());
        }
    }
}

fn search_inputs(seed: u64) -> (shiftwell::model::Batch, Vec<Vec<usize>>, ModelConfig) {
    let ds = dataset();
    let rep = &make_split_plan_sized(ds.len(), seed, 1, 3).unwrap().repetitions[0];
    let rows: Vec<_> = rep.train.iter().map(|&i| ds.rows[i].clone()).collect();
    let pre = Preprocessor::fit(&rows, &ds.schema).unwrap();
    let batch = build_batch(ds, &rep.train, &pre, TaskMode::Regression).unwrap();
    let pos: std::collections::BTreeMap<usize, usize> = rep.train.iter().enumerate().map(|(p, i)| (*i, p)).collect();
    let folds = rep.folds.iter().map(|f| f.iter().map(|i| pos[i]).collect()).collect();
    let base = ModelConfig::new(ds.schema.len(), Variant::Mtml, TaskMode::Regression);
    (batch, folds, base)
}

#[test]
fn single_point_grid_is_returned() {
    let (batch, folds, base) = search_inputs(0);
    let r = grid_search(&batch, &folds, &base, &GridSpec::single(point(0.01, 10)), 0).unwrap();
    assert_eq!(r.best, 0);
    assert!(r.final_epochs() >= 1);
}

#[test]
fn frozen_candidate_never_wins() {
    for seed in 0..3 {
        let (batch, folds, base) = search_inputs(seed);
        let grid = GridSpec {
            points: vec![point(0.0, 40), point(0.01, 40)],
        };
        let r = grid_search(&batch, &folds, &base, &grid, seed).unwrap();
        assert_eq!(r.best, 1, "seed {seed}: {:?}", r.cv_loss);
    }
}

#[test]
fn identical_points_tie_to_the_first() {
    let (batch, folds, base) = search_inputs(1);
    let grid = GridSpec {
        points: vec![point(0.01, 10), point(0.01, 10)],
    };
    let r = grid_search(&batch, &folds, &base, &grid, 4).unwrap();
    assert_eq!(r.cv_loss[0], r.cv_loss[1]);
    assert_eq!(r.best, 0);
}

#[test]
fn report_shape_and_determinism() {
    let cfg = quick_config(
        vec![ModelKind::Mtml, ModelKind::Ml, ModelKind::Baseline],
        vec![TaskMode::Regression, TaskMode::Binary],
    );
    let a = run_experiment(dataset(), &cfg).unwrap();
    assert_eq!(a.rows.len(), 3 * 2 * Label::COUNT);
    assert_eq!(a.records.len(), 2 * 3 * 2 * Label::COUNT);
    for row in &a.rows {
        assert_eq!(row.n, 2);
        assert_eq!(row.metric, if row.task == TaskMode::Regression { "mae" } else { "f1" });
    }
    let b = run_experiment(dataset(), &cfg).unwrap();
    assert_eq!(a.metrics_csv().unwrap(), b.metrics_csv().unwrap());
    assert_eq!(a.significance_csv().unwrap(), b.significance_csv().unwrap());

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    assert_eq!(std::fs::read(dir.path().join("metrics.csv")).unwrap(), a.metrics_csv().unwrap());
    assert!(dir.path().join("logs").join("rep_01.csv").exists());
}

#[test]
fn majority_baseline_scores_a_floor() {
    let cfg = quick_config(vec![ModelKind::Baseline], vec![TaskMode::ThreeClass]);
    let r = run_experiment(dataset(), &cfg).unwrap();
    for row in &r.rows {
        // A constant prediction hits one class: macro f1 is at most 1/2.
        assert!(row.mean <= 0.5 + 1e-12, "{}", row.mean);
    }
}

// Test-partition features must not reach imputation, scaling, the grid
// choice or training: corrupting them leaves every training-side value
// untouched.
#[test]
fn test_rows_do_not_leak() {
    let ds = dataset();
    let cfg = ExperimentConfig {
        repetitions: 1,
        ..quick_config(vec![ModelKind::Mtml, ModelKind::Baseline], vec![TaskMode::Regression])
    };
    let plan = split_plan(ds, &cfg).unwrap();
    let mut poisoned = ds.clone();
    for &i in &plan.repetitions[0].test {
        let row = &mut poisoned.rows[i];
        row.values.iter_mut().for_each(|v| *v = 1e6);
        row.missing.iter_mut().for_each(|m| *m = false);
        poisoned.labels[i].0 = [100.0; Label::COUNT];
    }
    let clean = run_experiment(ds, &cfg).unwrap();
    let dirty = run_experiment(&poisoned, &cfg).unwrap();
    for (a, b) in clean.records.iter().zip(&dirty.records) {
        assert_eq!((a.kind, a.label), (b.kind, b.label));
        assert_eq!(a.grid_point, b.grid_point);
        assert_eq!(a.cv_loss.map(f64::to_bits), b.cv_loss.map(f64::to_bits));
        assert_eq!(a.final_epochs, b.final_epochs);
        assert_eq!(a.n_train, b.n_train);
    }
    assert_ne!(clean.metrics_csv().unwrap(), dirty.metrics_csv().unwrap());
}

#[test]
fn participant_split_keeps_people_apart() {
    let ds = dataset();
    let cfg = ExperimentConfig {
        split: SplitMode::Participant,
        ..quick_config(vec![ModelKind::Baseline], vec![TaskMode::Regression])
    };
    let plan = split_plan(ds, &cfg).unwrap();
    for rep in &plan.repetitions {
        let who = |idx: &[usize]| idx.iter().map(|&i| ds.rows[i].participant_id.clone()).collect::<BTreeSet<_>>();
        assert!(who(&rep.train).is_disjoint(&who(&rep.test)));
    }
}

#[test]
fn mae_examples() {
    assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    assert_eq!(mae(&[10.0, 20.0, 30.0], &[15.0, 25.0, 35.0]).unwrap(), 5.0);
    assert_eq!(mae(&[0.0, 100.0, 40.0, 7.0], &[10.0, 70.0, 40.0, 8.0]).unwrap(), 41.0 / 4.0);
    assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
}
