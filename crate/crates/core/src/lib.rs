//! Feature engineering, cohort statistics and role-branched multitask
//! multilabel networks for forecasting shift workers' next-day wellbeing
//! from wearable and survey data.

pub mod cli;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod features;
pub mod introspect;
pub mod labels;
pub mod model;
pub mod nn;
pub mod stats;
pub mod synth;
pub mod util;

pub use domain::{Label, Role, WellbeingLabels};
pub use error::{Error, Result};
