//! Repeated 80/20 evaluation with cross-validated grid search, label
//! discretization, metrics and cross-model significance tests.

pub mod dataset;
pub mod grid;
pub mod metrics;
pub mod run;
pub mod split;

pub use dataset::Dataset;
pub use grid::{grid_search, GridPoint, GridSearchResult, GridSpec};
pub use metrics::{discretize, discretize_all, f1_score, mae, F1Report, LabelView};
pub use run::{
    build_batch, run_experiment, run_experiment_with, split_plan, unit_config, ExperimentConfig, MetricRow,
    MetricsReport, ModelKind, RepetitionRecord, SignificanceRow,
};
pub use split::{
    make_participant_split_plan, make_split_plan, make_split_plan_sized, Repetition, SplitMode, SplitPlan, FOLDS,
    MIN_ROWS, REPETITIONS, TEST_FRACTION,
};
