use std::fmt::Write as _;

use super::generate::CohortBundle;
use super::spec::CohortSpec;
use crate::domain::{Label, Role, WellbeingLabels};
use crate::error::{Error, Result};
use crate::features::{DailyFeatureVector, FeatureSchema, WorkShift};
use crate::stats::descriptive::{mean, sample_sd};
use crate::stats::{compare_groups, label_correlation_matrix};

/// Tolerance on label-pair r² against the loading-implied target.
pub const R2_TOLERANCE: f64 = 0.10;
/// Tolerance on each role's mean day-level heart rate, in bpm.
pub const HR_TOLERANCE: f64 = 1.0;
/// Tolerance on label means and SDs, in scale points.
pub const LABEL_TOLERANCE: f64 = 3.0;
/// Tolerance on shift shares.
pub const SHARE_TOLERANCE: f64 = 0.05;
/// Standard errors allowed for the other day-level moments.
pub const SE_MULTIPLIER: f64 = 4.0;
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCheck {
    pub name: String,
    pub role: Option<Role>,
    pub target: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CalibrationCheck {
    fn within(name: impl Into<String>, role: Option<Role>, target: f64, observed: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            role,
            target,
            observed,
            tolerance,
            passed: observed.is_finite() && (observed - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationReport {
    pub checks: Vec<CalibrationCheck>,
}

impl CalibrationReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CalibrationCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn get(&self, name: &str, role: Option<Role>) -> Option<&CalibrationCheck> {
        self.checks.iter().find(|c| c.name == name && c.role == role)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let role = c.role.map_or("all", |r| r.as_str());
            let _ = writeln!(
                s,
                "{:<4} {:<34} {:<6} target {:>10.4} observed {:>10.4} tol {:.4}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                role,
                c.target,
                c.observed,
                c.tolerance
            );
        }
        s
    }
}

fn column(rows: &[&DailyFeatureVector], schema: &FeatureSchema, name: &str) -> Vec<f64> {
    rows.iter().filter_map(|r| r.get(schema, name)).collect()
}

/// Compares a bundle's empirical moments against `spec`. Every check is
/// reported whether or not it passes.
pub fn calibration_report(bundle: &CohortBundle, spec: &CohortSpec) -> Result<CalibrationReport> {
    let schema = FeatureSchema::default();
    let rows = bundle.feature_rows(&schema)?;
    let mut checks = Vec::new();

    for role in Role::ALL {
        let rs = spec.role(role);
        let mine: Vec<&DailyFeatureVector> = rows.iter().filter(|r| r.role == role).collect();
        let hr = column(&mine, &schema, "hr_mean");
        checks.push(CalibrationCheck::within(
            "hr_mean",
            Some(role),
            rs.hr_mean,
            mean(&hr).unwrap_or(f64::NAN),
            HR_TOLERANCE,
        ));
        for (name, target, sd) in [
            ("sleep_duration", rs.sleep_duration_mean, rs.sleep_duration_sd),
            ("sleep_efficiency", rs.sleep_efficiency_mean, rs.sleep_efficiency_sd),
            ("steps_total", rs.steps_mean, rs.steps_sd),
            ("overwork", rs.overwork_mean, rs.overwork_sd),
        ] {
            let v = column(&mine, &schema, name);
            let tol = SE_MULTIPLIER * sd / (v.len().max(1) as f64).sqrt();
            checks.push(CalibrationCheck::within(name, Some(role), target, mean(&v).unwrap_or(f64::NAN), tol));
        }
        let total: f64 = rs.shift_mix.iter().sum();
        let surveyed: Vec<WorkShift> = bundle
            .data
            .histories
            .iter()
            .filter(|(pid, _)| bundle.data.roles.get(*pid) == Some(&role))
            .flat_map(|(_, h)| h.surveys.values().map(|s| s.work_shift))
            .collect();
        for (i, shift) in WorkShift::WORKED.iter().enumerate() {
            let share = if surveyed.is_empty() {
                f64::NAN
            } else {
                surveyed.iter().filter(|s| *s == shift).count() as f64 / surveyed.len() as f64
            };
            checks.push(CalibrationCheck::within(
                format!("shift{}_share", i + 1),
                Some(role),
                rs.shift_mix[i] / total,
                share,
                SHARE_TOLERANCE,
            ));
        }

        let labels: Vec<WellbeingLabels> = bundle
            .labels
            .iter()
            .filter(|l| bundle.data.roles.get(&l.participant_id) == Some(&role))
            .map(|l| l.labels)
            .collect();
        for label in Label::ALL {
            let v: Vec<f64> = labels.iter().map(|w| w.get(label)).collect();
            checks.push(CalibrationCheck::within(
                format!("{label}_mean"),
                Some(role),
                rs.label_mean[label.index()],
                mean(&v).unwrap_or(f64::NAN),
                LABEL_TOLERANCE,
            ));
            checks.push(CalibrationCheck::within(
                format!("{label}_sd"),
                Some(role),
                rs.label_sd[label.index()],
                sample_sd(&v).unwrap_or(f64::NAN),
                LABEL_TOLERANCE,
            ));
        }
    }

    let all: Vec<WellbeingLabels> = bundle.labels.iter().map(|l| l.labels).collect();
    let target = spec.labels.correlation_target();
    let corr = label_correlation_matrix(&all).ok();
    for i in 0..Label::COUNT {
        for j in i + 1..Label::COUNT {
            checks.push(CalibrationCheck::within(
                format!("r2_{}_{}", Label::ALL[i], Label::ALL[j]),
                None,
                target[i][j].powi(2),
                corr.as_ref().map_or(f64::NAN, |c| c.r_squared[i][j]),
                R2_TOLERANCE,
            ));
        }
    }

    // Role differences the generator plants must be detectable.
    let report = compare_groups(&rows, &schema).ok();
    for (feature, nurse_target, doctor_target) in [
        ("hr_mean", spec.nurse.hr_mean, spec.doctor.hr_mean),
        ("overwork", spec.nurse.overwork_mean, spec.doctor.overwork_mean),
    ] {
        let want = (nurse_target - doctor_target).signum();
        let (p, direction) = match report.as_ref().and_then(|r| r.get(feature)) {
            Some(row) => {
                let by_role = |role: Role| {
                    let v = column(
                        &rows.iter().filter(|r| r.role == role).collect::<Vec<_>>(),
                        &schema,
                        feature,
                    );
                    mean(&v).unwrap_or(f64::NAN)
                };
                (row.p_value, (by_role(Role::Nurse) - by_role(Role::Doctor)).signum())
            }
            None => (f64::NAN, 0.0),
        };
        checks.push(CalibrationCheck {
            name: format!("{feature}_role_difference_p"),
            role: None,
            target: SIGNIFICANCE,
            observed: p,
            tolerance: 0.0,
            passed: p < SIGNIFICANCE && direction == want && want != 0.0,
        });
    }
    Ok(CalibrationReport { checks })
}

/// Fails with [`Error::CalibrationFailure`] naming every missed target.
pub fn self_check(bundle: &CohortBundle, spec: &CohortSpec) -> Result<CalibrationReport> {
    if bundle.labels.is_empty() || bundle.data.histories.is_empty() {
        return Err(Error::CalibrationFailure("bundle has no participants or labels".into()));
    }
    let report = calibration_report(bundle, spec)?;
    if report.passed() {
        return Ok(report);
    }
    let missed: Vec<String> = report
        .failures()
        .iter()
        .map(|c| {
            format!(
                "{} ({}): observed {:.4}, target {:.4} +- {:.4}",
                c.name,
                c.role.map_or("all", |r| r.as_str()),
                c.observed,
                c.target,
                c.tolerance
            )
        })
        .collect();
    Err(Error::CalibrationFailure(missed.join("; ")))
}
