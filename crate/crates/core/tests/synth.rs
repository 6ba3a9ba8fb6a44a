use shiftwell::experiment::{build_batch, Dataset};
use shiftwell::features::io::read_bundle;
use shiftwell::features::FeatureSchema;
use shiftwell::labels::{read_labels_csv, LABELS_FILE};
use shiftwell::model::{make_variant, predict, train, ModelConfig, Preprocessor, TaskMode, Variant};
use shiftwell::synth::{calibration_report, generate, self_check, CohortSpec, GROUND_TRUTH_FILE};
use shiftwell::{Error, Label, Role};

#[test]
fn default_bundle_hits_published_moments() {
    let spec = CohortSpec::default();
    let bundle = generate(&spec, 7).unwrap();
    let report = self_check(&bundle, &spec).unwrap();
    let nurse = report.get("hr_mean", Some(Role::Nurse)).unwrap();
    let doctor = report.get("hr_mean", Some(Role::Doctor)).unwrap();
    assert!((nurse.observed - 78.5).abs() <= 1.0, "{}", nurse.observed);
    assert!((doctor.observed - 70.6).abs() <= 1.0, "{}", doctor.observed);
    let hs = report.get("r2_happiness_stress", None).unwrap();
    assert!((hs.observed - 0.70).abs() <= 0.10, "{}", hs.observed);
    for f in ["hr_mean_role_difference_p", "overwork_role_difference_p"] {
        assert!(report.get(f, None).unwrap().passed, "{f}");
    }
}

#[test]
fn total_days_match_the_study() {
    let spec = CohortSpec::default();
    assert_eq!(spec.total_label_days(), 241);
    let bundle = generate(&spec, 0).unwrap();
    assert_eq!(bundle.labels.len(), 241);
    assert_eq!(bundle.data.roles.values().filter(|r| **r == Role::Nurse).count(), 10);
    assert_eq!(bundle.data.roles.values().filter(|r| **r == Role::Doctor).count(), 4);
}

#[test]
fn generation_is_deterministic() {
    let spec = CohortSpec::default();
    let a = generate(&spec, 11).unwrap();
    let b = generate(&spec, 11).unwrap();
    assert_eq!(a.data, b.data);
    assert_eq!(a.labels, b.labels);
    let c = generate(&spec, 12).unwrap();
    assert_ne!(a.labels, c.labels);
}

#[test]
fn written_bundle_parses_back() {
    let spec = CohortSpec::default();
    let bundle = generate(&spec, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    bundle.write(dir.path()).unwrap();
    assert_eq!(read_bundle(dir.path()).unwrap(), bundle.data);
    assert_eq!(read_labels_csv(&dir.path().join(LABELS_FILE)).unwrap(), bundle.labels);
    let truth = std::fs::read_to_string(dir.path().join(GROUND_TRUTH_FILE)).unwrap();
    assert!(truth.contains("sleep_regularity"));
    let ds = Dataset::load(dir.path()).unwrap();
    assert_eq!(ds.len(), 241);
}

#[test]
fn few_labels_sit_on_the_scale_ends() {
    let bundle = generate(&CohortSpec::default(), 5).unwrap();
    let values: Vec<f64> = bundle.labels.iter().flat_map(|l| l.labels.0).collect();
    let ends = values.iter().filter(|v| **v <= 0.0 || **v >= 100.0).count();
    assert!((ends as f64) < 0.02 * values.len() as f64, "{ends} of {}", values.len());
}

#[test]
fn planted_signs_follow_the_design() {
    let bundle = generate(&CohortSpec::default(), 0).unwrap();
    let ranked = bundle.planted.ranked_features();
    let top: Vec<&str> = ranked.iter().take(3).map(|(n, _)| n.as_str()).collect();
    for f in ["sleep_regularity", "sleep_efficiency", "shift1"] {
        assert!(top.contains(&f), "{top:?}");
    }
    let spec = CohortSpec::default();
    for role in Role::ALL {
        assert!(spec.role(role).planted["steps_total"] < 0.0);
        assert!(spec.role(role).planted["entropy_active"] < 0.0);
    }
}

#[test]
fn swapped_heart_rate_fails_calibration() {
    let spec = CohortSpec::default();
    let mut swapped = spec.clone();
    swapped.doctor.hr_mean = spec.nurse.hr_mean;
    swapped.nurse.hr_mean = spec.doctor.hr_mean;
    let bundle = generate(&swapped, 7).unwrap();
    match self_check(&bundle, &spec) {
        Err(Error::CalibrationFailure(msg)) => assert!(msg.contains("hr_mean"), "{msg}"),
        other => panic!("expected CalibrationFailure, got {other:?}"),
    }
    let report = calibration_report(&bundle, &spec).unwrap();
    assert!(!report.get("hr_mean", Some(Role::Doctor)).unwrap().passed);
}

#[test]
fn empty_bundle_fails_calibration() {
    let spec = CohortSpec::default();
    let mut bundle = generate(&spec, 1).unwrap();
    bundle.labels.clear();
    bundle.data.histories.clear();
    assert!(matches!(self_check(&bundle, &spec), Err(Error::CalibrationFailure(_))));
}

#[test]
fn infeasible_specs_are_rejected() {
    let mut spec = CohortSpec::default();
    spec.labels.loadings[0] = 1.5;
    assert!(matches!(generate(&spec, 0), Err(Error::InfeasibleSpec(_))));

    let mut spec = CohortSpec::default();
    spec.nurse.label_sd[Label::Stress.index()] = 60.0;
    assert!(matches!(generate(&spec, 0), Err(Error::InfeasibleSpec(_))));

    let mut spec = CohortSpec::default();
    spec.doctor.shift_mix = [0.9, 0.9, 0.9];
    assert!(spec.validate().is_err());
}

#[test]
fn spec_survives_toml() {
    let spec = CohortSpec::default();
    assert_eq!(CohortSpec::from_toml(&spec.to_toml().unwrap()).unwrap(), spec);
}

// With every noise source off the labels are a fixed function of the
// features, so a network must be able to fit them almost exactly.
#[test]
fn noiseless_labels_are_learnable() {
    let spec = CohortSpec::default().noiseless();
    let schema = FeatureSchema::default();
    let bundle = generate(&spec, 0).unwrap();
    let ds = Dataset::pair(schema.clone(), bundle.feature_rows(&schema).unwrap(), &bundle.labels).unwrap();
    let pre = Preprocessor::fit(&ds.rows, &schema).unwrap();
    let idx: Vec<usize> = (0..ds.len()).collect();
    let batch = build_batch(&ds, &idx, &pre, TaskMode::Regression).unwrap();
    let mut config = ModelConfig::new(schema.names.len(), Variant::Mtml, TaskMode::Regression);
    config.train.epochs = 300;
    let mut net = make_variant(&config).unwrap();
    train(&mut net, &batch, None).unwrap();
    let preds = predict(&net, &batch.x, &batch.roles).unwrap();
    let mut err = 0.0;
    let mut n = 0.0;
    for (row, target) in preds.iter().zip(&batch.targets) {
        for (head, p) in row.iter().enumerate() {
            err += (p.point() - target[net.labels()[head].index()]).abs();
            n += 1.0;
        }
    }
    let mae = err / n;
    assert!(mae < 3.0, "noiseless MAE {mae}");
}
