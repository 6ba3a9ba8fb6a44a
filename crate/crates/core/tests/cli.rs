use std::path::Path;
use std::process::Command;

use shiftwell::cli::{run, CliError, EXIT_DATA, EXIT_USAGE};

fn sw(args: &[&str]) -> Result<std::path::PathBuf, CliError> {
    run(std::iter::once("shiftwell").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const GRID: &str = "[[point]]\nshared_widths = [8]\nbranch_width = 4\nlearning_rate = 0.01\nepochs = 10\n";

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    sw(&["synth", "--seed", "2", "--out", p(&data)]).unwrap();
    let manifest = sw(&["features", "--data", p(&data)]).unwrap();
    let features = data.join("features.csv");
    assert!(features.is_file());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "features");
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(m["inputs"].as_array().unwrap().len() >= 5);

    let grid = tmp.path().join("grid.toml");
    std::fs::write(&grid, GRID).unwrap();
    let out = tmp.path().join("eval");
    sw(&[
        "evaluate", "--data", p(&data), "--variants", "mtml,nn,baseline", "--tasks", "regression,three",
        "--grid", p(&grid), "--repetitions", "2", "--folds", "3", "--out", p(&out),
    ])
    .unwrap();
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3 * 2 * 5);
    assert!(out.join("significance.csv").is_file());

    let cmp = tmp.path().join("cmp");
    sw(&["compare", "--features", p(&features), "--out", p(&cmp)]).unwrap();
    assert!(std::fs::read_to_string(cmp.join("compare.csv")).unwrap().contains("hr_mean"));

    let model = tmp.path().join("model.txt");
    sw(&["train", "--data", p(&data), "--variant", "ml", "--task", "binary", "--epochs", "5", "--out", p(&model)]).unwrap();
    let preds = tmp.path().join("pred.csv");
    sw(&["predict", "--model", p(&model), "--features", p(&features), "--out", p(&preds)]).unwrap();
    let text = std::fs::read_to_string(&preds).unwrap();
    assert!(text.starts_with("participant_id,date,role,alertness,alertness_p0,alertness_p1,"));
    assert_eq!(text.lines().count(), std::fs::read_to_string(&features).unwrap().lines().count());

    let report = tmp.path().join("imp.csv");
    sw(&["analyze", "--model", p(&model), "--features", p(&features), "--out", p(&report)]).unwrap();
    assert_eq!(std::fs::read_to_string(&report).unwrap().lines().count(), 41);
}

#[test]
fn usage_errors_exit_two() {
    assert!(matches!(sw(&["synth", "--bogus"]), Err(CliError::Usage(_))));
    let status = Command::new(env!("CARGO_BIN_EXE_shiftwell")).args(["synth", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
    let status = Command::new(env!("CARGO_BIN_EXE_shiftwell")).arg("--help").status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn wrong_feature_columns_name_the_column() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    sw(&["synth", "--seed", "0", "--out", p(&data)]).unwrap();
    sw(&["features", "--data", p(&data)]).unwrap();
    let features = data.join("features.csv");
    let text = std::fs::read_to_string(&features).unwrap();
    let cut: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(4);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&features, cut).unwrap();
    let err = sw(&["compare", "--features", p(&features), "--out", p(&tmp.path().join("c"))]).unwrap_err();
    match &err {
        CliError::Data(msg) => assert!(msg.contains("hr_sd"), "{msg}"),
        other => panic!("expected DataError, got {other:?}"),
    }
    assert_eq!(err.exit_code(), EXIT_DATA);
}

#[test]
fn config_errors_are_categorised() {
    let tmp = tempfile::tempdir().unwrap();
    let err = sw(&["synth", "--out", p(tmp.path()), "--spec", p(&tmp.path().join("none.toml"))]).unwrap_err();
    assert!(matches!(err, CliError::Data(_)));
    let spec = tmp.path().join("spec.toml");
    std::fs::write(&spec, "[labels]\nloadings = [1.5, 0.9, 0.9, 0.9, 0.9]\n").unwrap();
    let err = sw(&["synth", "--out", p(&tmp.path().join("o")), "--spec", p(&spec)]).unwrap_err();
    assert!(matches!(err, CliError::Config(_)), "{err:?}");
    assert!(!tmp.path().join("o").join("hr.csv").exists());
}
