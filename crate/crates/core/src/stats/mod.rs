//! Cohort statistics: two-group tests, normality routing, ANOVA with Tukey
//! HSD, and label correlations.

pub mod compare;
pub mod descriptive;
pub mod dist;
pub mod hypothesis;
pub mod normality;

pub use compare::{
    compare_groups, compare_numeric, label_correlation_matrix, ComparisonReport, FeatureComparison,
    LabelCorrelation, RoleSummary,
};
pub use hypothesis::{
    anova_tukey, chi_square, mann_whitney_u, pearson_r, welch_t, AnovaTukey, Correlation, GroupSample,
    GroupSummary, TestResult,
};
pub use normality::{normality_gate, shapiro_wilk, Normality, ShapiroWilk};
