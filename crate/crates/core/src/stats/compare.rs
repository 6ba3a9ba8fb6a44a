//! Nurse-vs-doctor feature comparison and label correlation analysis.

use super::descriptive::{mean, sample_sd};
use super::hypothesis::{chi_square, mann_whitney_u, pearson_r, welch_t, GroupSample, TestResult};
use super::normality::{normality_gate, Normality};
use crate::domain::{Label, Role, WellbeingLabels};
use crate::error::{Error, Result};
use crate::features::{DailyFeatureVector, FeatureSchema};
use crate::util::fmt_num;

/// Binary features compared as 2-level categoricals rather than numerically.
const BINARY_FEATURES: [&str; 1] = ["alcohol_or_drug"];

#[derive(Debug, Clone, PartialEq)]
pub enum RoleSummary {
    /// Mean and sample SD of the non-missing values.
    Numeric { n: usize, mean: f64, sd: f64 },
    /// Proportion per level, in level order.
    Categorical { n: usize, proportions: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureComparison {
    pub feature: String,
    pub levels: Vec<String>,
    pub nurse: RoleSummary,
    pub doctor: RoleSummary,
    pub test: &'static str,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub rows: Vec<FeatureComparison>,
}

impl ComparisonReport {
    pub fn get(&self, feature: &str) -> Option<&FeatureComparison> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "feature",
            "nurse_n",
            "nurse_summary",
            "doctor_n",
            "doctor_summary",
            "test",
            "statistic",
            "p_value",
        ])?;
        for r in &self.rows {
            let (nn, ns) = summary_cells(&r.nurse, &r.levels);
            let (dn, ds) = summary_cells(&r.doctor, &r.levels);
            w.write_record([
                r.feature.clone(),
                nn,
                ns,
                dn,
                ds,
                r.test.to_string(),
                fmt_num(r.statistic),
                fmt_num(r.p_value),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// Human-readable table in the "mean (SD)" style.
    pub fn to_text(&self) -> String {
        let mut lines = vec![[
            "feature".to_string(),
            "nurse".to_string(),
            "doctor".to_string(),
            "test".to_string(),
            "p".to_string(),
        ]];
        for r in &self.rows {
            lines.push([
                r.feature.clone(),
                pretty_summary(&r.nurse, &r.levels),
                pretty_summary(&r.doctor, &r.levels),
                r.test.to_string(),
                format!("{:.4}", r.p_value),
            ]);
        }
        let widths: Vec<usize> = (0..5)
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

fn summary_cells(s: &RoleSummary, levels: &[String]) -> (String, String) {
    match s {
        RoleSummary::Numeric { n, mean, sd } => (n.to_string(), format!("{}|{}", fmt_num(*mean), fmt_num(*sd))),
        RoleSummary::Categorical { n, proportions } => (
            n.to_string(),
            levels
                .iter()
                .zip(proportions)
                .map(|(l, p)| format!("{l}={}", fmt_num(*p)))
                .collect::<Vec<_>>()
                .join(";"),
        ),
    }
}

fn pretty_summary(s: &RoleSummary, levels: &[String]) -> String {
    match s {
        RoleSummary::Numeric { mean, sd, .. } => format!("{mean:.1} ({sd:.1})"),
        RoleSummary::Categorical { proportions, .. } => levels
            .iter()
            .zip(proportions)
            .map(|(l, p)| format!("{l} {:.1}%", 100.0 * p))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn numeric_summary(v: &[f64]) -> RoleSummary {
    RoleSummary::Numeric {
        n: v.len(),
        mean: mean(v).unwrap_or(f64::NAN),
        sd: sample_sd(v).unwrap_or(f64::NAN),
    }
}

/// Picks Welch when both groups pass the normality gate, Mann-Whitney otherwise.
pub fn compare_numeric(a: &GroupSample, b: &GroupSample) -> Result<TestResult> {
    let both_normal = [a, b]
        .iter()
        .all(|g| matches!(normality_gate(&g.values), Ok(Normality::Normal)));
    if both_normal {
        match welch_t(a, b) {
            Ok(r) => return Ok(r),
            Err(Error::DegenerateVariance(_)) => {}
            Err(e) => return Err(e),
        }
    }
    mann_whitney_u(a, b)
}

/// Counts per level for each role. `levels` returns the level index of a row
/// or None when the row has no usable value.
fn categorical_comparison(
    feature: &str,
    level_names: Vec<String>,
    per_role: [Vec<usize>; 2],
) -> Result<FeatureComparison> {
    let k = level_names.len();
    let mut counts = [vec![0.0; k], vec![0.0; k]];
    for (r, idx) in per_role.iter().enumerate() {
        for &i in idx {
            counts[r][i] += 1.0;
        }
    }
    let props = |c: &Vec<f64>, n: usize| -> Vec<f64> {
        c.iter().map(|v| if n > 0 { v / n as f64 } else { f64::NAN }).collect()
    };
    let nurse = RoleSummary::Categorical {
        n: per_role[0].len(),
        proportions: props(&counts[0], per_role[0].len()),
    };
    let doctor = RoleSummary::Categorical {
        n: per_role[1].len(),
        proportions: props(&counts[1], per_role[1].len()),
    };
    // levels nobody reported carry no information and would zero an expected count
    let keep: Vec<usize> = (0..k).filter(|&j| counts[0][j] + counts[1][j] > 0.0).collect();
    let (statistic, p_value) = if keep.len() < 2 || per_role.iter().any(Vec::is_empty) {
        (0.0, 1.0)
    } else {
        let table: Vec<Vec<f64>> = counts
            .iter()
            .map(|c| keep.iter().map(|&j| c[j]).collect())
            .collect();
        let r = chi_square(&table)?;
        (r.statistic, r.p_value)
    };
    Ok(FeatureComparison {
        feature: feature.to_string(),
        levels: level_names,
        nurse,
        doctor,
        test: "chi_square",
        statistic,
        p_value,
    })
}

/// Table-style nurse-vs-doctor comparison over every schema feature. One-hot
/// groups and binary flags are compared with chi-square; numeric features go
/// through the normality gate.
pub fn compare_groups(
    rows: &[DailyFeatureVector],
    schema: &FeatureSchema,
) -> Result<ComparisonReport> {
    let by_role: [Vec<&DailyFeatureVector>; 2] = [
        rows.iter().filter(|r| r.role == Role::Nurse).collect(),
        rows.iter().filter(|r| r.role == Role::Doctor).collect(),
    ];
    if let Some(missing) = Role::ALL.iter().find(|r| by_role[r.index()].is_empty()) {
        return Err(Error::SingleGroup(format!("no rows for role {missing}")));
    }
    let groups = schema.one_hot_groups();
    let mut grouped = vec![false; schema.len()];
    for g in &groups {
        for &j in g {
            grouped[j] = true;
        }
    }

    let mut report = ComparisonReport::default();
    let mut emitted_groups = vec![false; groups.len()];
    for (j, name) in schema.names.iter().enumerate() {
        if grouped[j] {
            let gi = groups.iter().position(|g| g.contains(&j)).unwrap();
            if emitted_groups[gi] {
                continue;
            }
            emitted_groups[gi] = true;
            let cols = &groups[gi];
            let mut levels: Vec<String> = cols.iter().map(|&c| schema.names[c].clone()).collect();
            levels.push("none".into());
            let per_role = by_role.clone().map(|rs| {
                rs.iter()
                    .filter(|r| cols.iter().all(|&c| !r.missing[c]))
                    .map(|r| cols.iter().position(|&c| r.values[c] > 0.5).unwrap_or(cols.len()))
                    .collect::<Vec<_>>()
            });
            let label = group_label(name);
            report.rows.push(categorical_comparison(&label, levels, per_role)?);
        } else if BINARY_FEATURES.contains(&name.as_str()) {
            let per_role = by_role.clone().map(|rs| {
                rs.iter()
                    .filter(|r| !r.missing[j])
                    .map(|r| usize::from(r.values[j] > 0.5))
                    .collect::<Vec<_>>()
            });
            report
                .rows
                .push(categorical_comparison(name, vec!["no".into(), "yes".into()], per_role)?);
        } else {
            let samples = [Role::Nurse, Role::Doctor].map(|role| {
                let v: Vec<f64> = by_role[role.index()]
                    .iter()
                    .filter(|r| !r.missing[j])
                    .map(|r| r.values[j])
                    .collect();
                GroupSample::new(role.as_str(), v)
            });
            let (test, statistic, p_value) = if samples.iter().any(|s| s.values.is_empty()) {
                ("none", f64::NAN, f64::NAN)
            } else {
                let r = compare_numeric(&samples[0], &samples[1])?;
                (r.test, r.statistic, r.p_value)
            };
            report.rows.push(FeatureComparison {
                feature: name.clone(),
                levels: Vec::new(),
                nurse: numeric_summary(&samples[0].values),
                doctor: numeric_summary(&samples[1].values),
                test,
                statistic,
                p_value,
            });
        }
    }
    Ok(report)
}

fn group_label(first_member: &str) -> String {
    if first_member.starts_with("wake_") {
        "wake_type".into()
    } else if first_member.starts_with("shift") {
        "work_shift".into()
    } else {
        first_member.to_string()
    }
}

/// Pairwise Pearson statistics between the five labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCorrelation {
    pub r: [[f64; Label::COUNT]; Label::COUNT],
    pub r_squared: [[f64; Label::COUNT]; Label::COUNT],
    pub p_value: [[f64; Label::COUNT]; Label::COUNT],
}

pub fn label_correlation_matrix(labels: &[WellbeingLabels]) -> Result<LabelCorrelation> {
    if labels.len() < 3 {
        return Err(Error::InsufficientRows {
            needed: 3,
            got: labels.len(),
        });
    }
    let cols: Vec<Vec<f64>> = (0..Label::COUNT)
        .map(|l| labels.iter().map(|w| w.0[l]).collect())
        .collect();
    let mut out = LabelCorrelation {
        r: [[1.0; Label::COUNT]; Label::COUNT],
        r_squared: [[1.0; Label::COUNT]; Label::COUNT],
        p_value: [[0.0; Label::COUNT]; Label::COUNT],
    };
    for i in 0..Label::COUNT {
        for j in i + 1..Label::COUNT {
            let c = pearson_r(&cols[i], &cols[j])?;
            for (a, b) in [(i, j), (j, i)] {
                out.r[a][b] = c.r;
                out.r_squared[a][b] = c.r_squared;
                out.p_value[a][b] = c.p_value;
            }
        }
    }
    Ok(out)
}
