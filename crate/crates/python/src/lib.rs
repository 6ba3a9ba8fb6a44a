//! Python bindings for the shiftwell pipeline.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use shiftwell::cli::{self, CliError};
use shiftwell::experiment::{self, run_experiment, Dataset as CoreDataset, ExperimentConfig, GridSpec, LabelView};
use shiftwell::features::io::read_features_csv;
use shiftwell::features::{self, SampleEntropyParams, SleepMinuteGrid};
use shiftwell::introspect::importance_report;
use shiftwell::model::{LabelPrediction, ModelBundle};
use shiftwell::stats::{self, GroupSample, TestResult};
use shiftwell::synth::{self, CohortSpec};

create_exception!(shiftwell_py, ShiftwellError, PyException);
create_exception!(shiftwell_py, DataError, ShiftwellError);
create_exception!(shiftwell_py, ConfigError, ShiftwellError);
create_exception!(shiftwell_py, UsageError, ShiftwellError);

fn err(e: shiftwell::Error) -> PyErr {
    cli_err(CliError::from(e))
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Usage(m) => UsageError::new_err(m),
        CliError::Data(m) => DataError::new_err(m),
        CliError::Config(m) => ConfigError::new_err(m),
    }
}

fn test_dict<'py>(py: Python<'py>, r: &TestResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("test", r.test.to_string())?;
    d.set_item("statistic", r.statistic)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("df", r.df)?;
    Ok(d)
}

/// Sample entropy with tolerance `r` times the series SD.
#[pyfunction]
#[pyo3(signature = (x, m=2, r=0.2))]
fn sample_entropy(x: Vec<f64>, m: usize, r: f64) -> PyResult<f64> {
    let p = SampleEntropyParams::new(m, r).map_err(err)?;
    features::sample_entropy(&x, &p).map_err(err)
}

/// Sleep regularity index from per-day minute masks (True = asleep).
#[pyfunction]
fn sleep_regularity(days: Vec<Vec<bool>>) -> PyResult<f64> {
    let grid = SleepMinuteGrid::from_masks(&days).map_err(err)?;
    features::sleep_regularity(&grid).map_err(err)
}

#[pyfunction]
fn welch_t<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = stats::welch_t(&GroupSample::new("a", a), &GroupSample::new("b", b)).map_err(err)?;
    test_dict(py, &r)
}

#[pyfunction]
fn mann_whitney_u<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = stats::mann_whitney_u(&GroupSample::new("a", a), &GroupSample::new("b", b)).map_err(err)?;
    test_dict(py, &r)
}

/// Returns (r, p_value).
#[pyfunction]
fn pearson_r(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let c = stats::pearson_r(&x, &y).map_err(err)?;
    Ok((c.r, c.p_value))
}

/// Class index of a 0-100 label: view is "binary" or "three".
#[pyfunction]
fn discretize(value: f64, view: &str) -> PyResult<usize> {
    let view = match view {
        "binary" => LabelView::Binary,
        "three" => LabelView::ThreeClass,
        other => return Err(ConfigError::new_err(format!("unknown view `{other}` (binary, three)"))),
    };
    experiment::discretize(value, view).map_err(err)
}

/// Generate a cohort into `out` and return the calibration checks.
#[pyfunction]
#[pyo3(signature = (out, seed=0, spec_toml=None))]
fn synthesize<'py>(py: Python<'py>, out: PathBuf, seed: u64, spec_toml: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = match spec_toml {
        Some(t) => CohortSpec::from_toml(t).map_err(err)?,
        None => CohortSpec::default(),
    };
    let bundle = synth::generate(&spec, seed).map_err(err)?;
    bundle.write(&out).map_err(err)?;
    let report = synth::calibration_report(&bundle, &spec).map_err(err)?;
    report
        .checks
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("name", &c.name)?;
            d.set_item("role", c.role.map(|r| r.to_string()))?;
            d.set_item("target", c.target)?;
            d.set_item("observed", c.observed)?;
            d.set_item("passed", c.passed)?;
            Ok(d)
        })
        .collect()
}

/// Run the command-line interface in-process; returns the manifest path.
#[pyfunction]
fn run_cli(args: Vec<String>) -> PyResult<PathBuf> {
    cli::run(std::iter::once("shiftwell".to_string()).chain(args)).map_err(cli_err)
}

/// Paired daily features and next-day labels from a data directory.
#[pyclass(frozen)]
struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreDataset::load(&dir).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn feature_names(&self) -> Vec<String> {
        self.inner.schema.names.clone()
    }

    fn participants(&self) -> Vec<String> {
        self.inner.participants()
    }

    /// Repeated held-out evaluation; one dict per (model, task, label).
    #[pyo3(signature = (variants, tasks, seed=0, repetitions=10, folds=5, grid_toml=None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        variants: Vec<String>,
        tasks: Vec<String>,
        seed: u64,
        repetitions: usize,
        folds: usize,
        grid_toml: Option<&str>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let config = ExperimentConfig {
            kinds: variants.iter().map(|v| v.parse()).collect::<Result<_, _>>().map_err(err)?,
            tasks: tasks.iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(err)?,
            grid: match grid_toml {
                Some(t) => GridSpec::from_toml(t).map_err(err)?,
                None => GridSpec::default(),
            },
            seed,
            repetitions,
            folds,
            ..Default::default()
        };
        let report = py.detach(|| run_experiment(&self.inner, &config)).map_err(err)?;
        report
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("model", r.kind.as_str())?;
                d.set_item("task", r.task.as_str())?;
                d.set_item("label", r.label.to_string())?;
                d.set_item("metric", r.metric)?;
                d.set_item("mean", r.mean)?;
                d.set_item("sd", r.sd)?;
                d.set_item("n", r.n)?;
                Ok(d)
            })
            .collect()
    }
}

/// A trained model container.
#[pyclass(frozen)]
struct Model {
    inner: ModelBundle,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ModelBundle::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn feature_names(&self) -> Vec<String> {
        self.inner.features.clone()
    }

    fn n_networks(&self) -> usize {
        self.inner.networks.len()
    }

    /// One dict per features.csv row mapping label to a value or class.
    fn predict<'py>(&self, py: Python<'py>, features_csv: PathBuf) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rows = read_features_csv(&features_csv, &self.inner.schema()).map_err(err)?;
        let preds = self.inner.predict_rows(&rows).map_err(err)?;
        preds
            .iter()
            .map(|p| {
                let d = PyDict::new(py);
                for (label, lp) in p {
                    match lp {
                        LabelPrediction::Value(v) => d.set_item(label.to_string(), *v)?,
                        LabelPrediction::Class { class, .. } => d.set_item(label.to_string(), *class)?,
                    }
                }
                Ok(d)
            })
            .collect()
    }

    /// (feature, importance) pairs, most important first.
    fn importance(&self, features_csv: PathBuf) -> PyResult<Vec<(String, f64)>> {
        let rows = read_features_csv(&features_csv, &self.inner.schema()).map_err(err)?;
        let net = self
            .inner
            .networks
            .first()
            .ok_or_else(|| DataError::new_err("model container holds no networks"))?;
        let x = self.inner.preprocessor.transform(&rows).map_err(err)?;
        let report = importance_report(net, &self.inner.features, &x).map_err(err)?;
        Ok(report
            .ranking
            .iter()
            .map(|&i| (report.features[i].name.clone(), report.features[i].importance))
            .collect())
    }
}

#[pymodule]
fn shiftwell_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ShiftwellError", m.py().get_type::<ShiftwellError>())?;
    m.add("DataError", m.py().get_type::<DataError>())?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("UsageError", m.py().get_type::<UsageError>())?;
    m.add_function(wrap_pyfunction!(sample_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(sleep_regularity, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_r, m)?)?;
    m.add_function(wrap_pyfunction!(discretize, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    Ok(())
}
