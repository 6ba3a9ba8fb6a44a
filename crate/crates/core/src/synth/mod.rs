//! Synthetic cohort generator calibrated to published nurse and doctor
//! moments, with labels planted from known feature coefficients.

pub mod calibration;
pub mod generate;
pub mod spec;

pub use calibration::{calibration_report, self_check, CalibrationCheck, CalibrationReport};
pub use generate::{generate, participant_ids, CohortBundle, PlantedModel, GROUND_TRUTH_FILE};
pub use spec::{CohortSpec, LabelSpec, RoleSpec};
