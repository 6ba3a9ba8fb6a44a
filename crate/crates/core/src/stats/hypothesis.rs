//! Two-group and k-group hypothesis tests.

use super::descriptive::{mean, midranks, sample_sd, sample_variance};
use super::dist::{chi_square_sf, f_sf, normal_sf, studentized_range_sf, t_two_sided};
use crate::error::{Error, Result};

/// Labelled numeric observations.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub label: String,
    pub values: Vec<f64>,
}

impl GroupSample {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    pub fn of(g: &GroupSample) -> Self {
        Self {
            label: g.label.clone(),
            n: g.values.len(),
            mean: mean(&g.values).unwrap_or(f64::NAN),
            sd: sample_sd(&g.values).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub test: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<f64>,
    pub groups: Vec<GroupSummary>,
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_t(a: &GroupSample, b: &GroupSample) -> Result<TestResult> {
    for g in [a, b] {
        if g.values.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: g.values.len(),
            });
        }
    }
    let (na, nb) = (a.values.len() as f64, b.values.len() as f64);
    let (ma, mb) = (mean(&a.values).unwrap(), mean(&b.values).unwrap());
    let (va, vb) = (
        sample_variance(&a.values).unwrap(),
        sample_variance(&b.values).unwrap(),
    );
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateVariance("both groups are constant".into()));
    }
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        test: "welch_t",
        statistic: t,
        p_value: t_two_sided(t, df),
        df: Some(df),
        groups: vec![GroupSummary::of(a), GroupSummary::of(b)],
    })
}

/// Mann-Whitney U for the first group, with midrank ties and a two-sided
/// normal approximation using tie and continuity corrections.
pub fn mann_whitney_u(a: &GroupSample, b: &GroupSample) -> Result<TestResult> {
    for g in [a, b] {
        if g.values.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
    }
    let na = a.values.len() as f64;
    let nb = b.values.len() as f64;
    let n = na + nb;
    let pooled: Vec<f64> = a.values.iter().chain(&b.values).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..a.values.len()].iter().sum();
    let u_a = rank_sum_a - na * (na + 1.0) / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mu = na * nb / 2.0;
    let sigma = (na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))).sqrt();
    let p = if sigma > 0.0 && sigma.is_finite() {
        let u_max = u_a.max(na * nb - u_a);
        let z = (u_max - mu - 0.5) / sigma;
        (2.0 * normal_sf(z)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(TestResult {
        test: "mann_whitney_u",
        statistic: u_a,
        p_value: p,
        df: None,
        groups: vec![GroupSummary::of(a), GroupSummary::of(b)],
    })
}

/// Pearson chi-square test of independence on an r x c table of counts
/// (no continuity correction).
pub fn chi_square(table: &[Vec<f64>]) -> Result<TestResult> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch("contingency table must be rectangular".into()));
    }
    if table.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Data("contingency counts must be finite and >= 0".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = row_sums[i] * col_sums[j] / total;
            if !(e > 0.0) {
                return Err(Error::ZeroExpected { row: i, col: j });
            }
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as f64;
    let p = if df == 0.0 { 1.0 } else { chi_square_sf(stat, df) };
    Ok(TestResult {
        test: "chi_square",
        statistic: stat,
        p_value: p,
        df: Some(df),
        groups: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub r_squared: f64,
}

/// Pearson correlation with a two-sided p-value from the t transform.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "pearson_r lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: x.len(),
        });
    }
    let mx = mean(x).unwrap();
    let my = mean(y).unwrap();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance("constant input to pearson_r".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (x.len() - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / ((1.0 - r) * (1.0 + r))).sqrt();
        t_two_sided(t, df)
    };
    Ok(Correlation {
        r,
        p_value: p,
        r_squared: r * r,
    })
}

/// One-way ANOVA plus Tukey HSD pairwise comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTukey {
    pub labels: Vec<String>,
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p_value: f64,
    /// Symmetric matrix of Tukey HSD p-values; diagonal is 1.
    pub pairwise_p: Vec<Vec<f64>>,
    /// `means[i] - means[j]`.
    pub mean_diff: Vec<Vec<f64>>,
}

impl AnovaTukey {
    pub fn significant(&self, i: usize, j: usize, alpha: f64) -> bool {
        i != j && self.pairwise_p[i][j] < alpha
    }
}

pub fn anova_tukey(groups: &[GroupSample]) -> Result<AnovaTukey> {
    if groups.len() < 2 {
        return Err(Error::DegenerateGroups(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.values.len() < 2) {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: g.values.len(),
        });
    }
    let k = groups.len();
    let n_total: usize = groups.iter().map(|g| g.values.len()).sum();
    let means: Vec<f64> = groups.iter().map(|g| mean(&g.values).unwrap()).collect();
    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / n_total as f64;
    let ss_between: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.values.len() as f64 * (m - grand) * (m - grand))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>())
        .sum();
    let df_between = (k - 1) as f64;
    let df_within = (n_total - k) as f64;
    let ms_within = ss_within / df_within;
    if ms_within == 0.0 {
        return Err(Error::DegenerateGroups("zero within-group variance".into()));
    }
    let f = (ss_between / df_between) / ms_within;
    let p_value = f_sf(f, df_between, df_within);

    let mut pairwise_p = vec![vec![1.0; k]; k];
    let mut mean_diff = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            mean_diff[i][j] = means[i] - means[j];
            if i < j {
                let ni = groups[i].values.len() as f64;
                let nj = groups[j].values.len() as f64;
                let se = (ms_within / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
                let q = (means[i] - means[j]).abs() / se;
                let p = studentized_range_sf(q, k as f64, df_within);
                pairwise_p[i][j] = p;
                pairwise_p[j][i] = p;
            }
        }
    }
    Ok(AnovaTukey {
        labels: groups.iter().map(|g| g.label.clone()).collect(),
        f,
        df_between,
        df_within,
        p_value,
        pairwise_p,
        mean_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn g(label: &str, v: &[f64]) -> GroupSample {
        GroupSample::new(label, v.to_vec())
    }

    #[test]
    fn welch_identical_groups() {
        let a = g("a", &[1.0, 2.0, 3.0, 4.0]);
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn welch_shuffled_equal_mean() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b = vec![3.0, 9.0, 1.0, 10.0, 5.0, 2.0, 8.0, 4.0, 7.0, 6.0];
        assert_eq!(welch_t(&g("a", &a), &g("b", &b)).unwrap().statistic, 0.0);
    }

    #[test]
    fn welch_rejects_constant_groups() {
        let a = g("a", &[2.0, 2.0]);
        assert!(matches!(welch_t(&a, &a), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn welch_matches_pooled_t_for_balanced_equal_variance() {
        let a = [1.0, 3.0, 5.0, 7.0];
        let b = [2.0, 6.0, 8.0, 4.0].map(|v| v + 3.0);
        let r = welch_t(&g("a", &a), &g("b", &b)).unwrap();
        let sp2 = (sample_variance(&a).unwrap() + sample_variance(&b).unwrap()) / 2.0;
        let pooled = (mean(&a).unwrap() - mean(&b).unwrap()) / (sp2 * (2.0 / 4.0)).sqrt();
        assert_relative_eq!(r.statistic, pooled, epsilon = 1e-12);
        assert_relative_eq!(r.df.unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn mann_whitney_separation_and_symmetry() {
        let r = mann_whitney_u(&g("a", &[1.0, 2.0, 3.0]), &g("b", &[4.0, 5.0, 6.0])).unwrap();
        assert_eq!(r.statistic, 0.0);
        let a = g("a", &[3.0, 1.0, 4.0, 1.0, 5.0]);
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.statistic, 12.5);
        assert_eq!(r.p_value, 1.0);
        let all_tied = g("t", &[2.0, 2.0]);
        assert_eq!(mann_whitney_u(&all_tied, &all_tied).unwrap().p_value, 1.0);
    }

    #[test]
    fn chi_square_hand_cases() {
        let r = chi_square(&[vec![10.0, 0.0], vec![0.0, 10.0]]).unwrap();
        assert_relative_eq!(r.statistic, 20.0, epsilon = 1e-12);
        assert_eq!(r.df, Some(1.0));
        let r = chi_square(&[vec![10.0, 20.0], vec![5.0, 10.0]]).unwrap();
        assert_relative_eq!(r.statistic, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.p_value, 1.0, epsilon = 1e-12);
        assert_eq!(
            chi_square(&[vec![1.0, 0.0], vec![2.0, 0.0]]),
            Err(Error::ZeroExpected { row: 0, col: 1 })
        );
    }

    #[test]
    fn pearson_cases() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let c = pearson_r(&x, &y).unwrap();
        assert_relative_eq!(c.r, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.r_squared, 1.0, epsilon = 1e-15);
        let c = pearson_r(&[-1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(c.r, 0.0);
        assert!(matches!(
            pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn anova_identical_and_separated() {
        let a = g("a", &[1.0, 2.0, 3.0]);
        let r = anova_tukey(&[a.clone(), a.clone(), a]).unwrap();
        assert_eq!(r.f, 0.0);
        assert!((0..3).all(|i| (0..3).all(|j| !r.significant(i, j, 0.05))));

        let groups: Vec<GroupSample> = [0.0, 10.0, 20.0]
            .iter()
            .map(|&c| g("x", &[c - 0.01, c, c + 0.01, c + 0.005]))
            .collect();
        let r = anova_tukey(&groups).unwrap();
        assert!(r.p_value < 1e-10);
        assert!((0..3).all(|i| (0..3).all(|j| i == j || r.significant(i, j, 0.05))));

        let flat = g("f", &[1.0, 1.0]);
        assert!(matches!(
            anova_tukey(&[flat.clone(), flat]),
            Err(Error::DegenerateGroups(_))
        ));
    }

    proptest! {
        #[test]
        fn u_statistics_sum_to_product(
            a in proptest::collection::vec(0u8..20, 1..30),
            b in proptest::collection::vec(0u8..20, 1..30),
        ) {
            let ga = g("a", &a.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
            let gb = g("b", &b.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
            let ua = mann_whitney_u(&ga, &gb).unwrap();
            let ub = mann_whitney_u(&gb, &ga).unwrap();
            prop_assert_eq!(ua.statistic + ub.statistic, (a.len() * b.len()) as f64);
            prop_assert_eq!(ua.p_value, ub.p_value);
            prop_assert!((0.0..=1.0).contains(&ua.p_value));
        }

        #[test]
        fn chi_square_permutation_invariant(
            cells in proptest::collection::vec(1u32..50, 6),
        ) {
            let t: Vec<Vec<f64>> = cells.chunks(3).map(|r| r.iter().map(|&c| f64::from(c)).collect()).collect();
            let swapped_rows = vec![t[1].clone(), t[0].clone()];
            let swapped_cols: Vec<Vec<f64>> = t.iter().map(|r| vec![r[2], r[0], r[1]]).collect();
            let base = chi_square(&t).unwrap().statistic;
            prop_assert!((chi_square(&swapped_rows).unwrap().statistic - base).abs() <= 1e-10 * base.max(1.0));
            prop_assert!((chi_square(&swapped_cols).unwrap().statistic - base).abs() <= 1e-10 * base.max(1.0));
        }

        #[test]
        fn welch_antisymmetric(
            a in proptest::collection::vec(-100.0f64..100.0, 2..20),
            b in proptest::collection::vec(-100.0f64..100.0, 2..20),
        ) {
            let (ga, gb) = (g("a", &a), g("b", &b));
            if let (Ok(x), Ok(y)) = (welch_t(&ga, &gb), welch_t(&gb, &ga)) {
                prop_assert_eq!(x.statistic, -y.statistic);
                prop_assert_eq!(x.p_value, y.p_value);
                prop_assert!((0.0..=1.0).contains(&x.p_value));
            }
        }
    }
}
