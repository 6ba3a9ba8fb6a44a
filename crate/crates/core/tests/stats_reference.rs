//! Hypothesis tests against recorded scipy outputs (see fixtures/).

use serde_json::Value;
use shiftwell::stats::{
    anova_tukey, chi_square, mann_whitney_u, normality_gate, pearson_r, shapiro_wilk, welch_t, GroupSample,
    Normality,
};

fn fixtures() -> Value {
    serde_json::from_str(include_str!("fixtures/stats_fixtures.json")).unwrap()
}

fn vec_of(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

#[test]
fn welch_matches_reference() {
    for case in fixtures()["welch_t"].as_array().unwrap() {
        let a = GroupSample::new("a", vec_of(&case["a"]));
        let b = GroupSample::new("b", vec_of(&case["b"]));
        let r = welch_t(&a, &b).unwrap();
        assert!(close(r.statistic, f(&case["statistic"]), 1e-9), "{} vs {}", r.statistic, case["statistic"]);
        assert!(close(r.df.unwrap(), f(&case["df"]), 1e-9));
        assert!(close(r.p_value, f(&case["p_value"]), 1e-6), "{} vs {}", r.p_value, case["p_value"]);
    }
}

#[test]
fn mann_whitney_matches_reference() {
    for case in fixtures()["mann_whitney_u"].as_array().unwrap() {
        let a = GroupSample::new("a", vec_of(&case["a"]));
        let b = GroupSample::new("b", vec_of(&case["b"]));
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.statistic, f(&case["statistic"]));
        assert!(close(r.p_value, f(&case["p_value"]), 1e-6), "{} vs {}", r.p_value, case["p_value"]);
    }
}

#[test]
fn chi_square_matches_reference() {
    for case in fixtures()["chi_square"].as_array().unwrap() {
        let table: Vec<Vec<f64>> = case["table"].as_array().unwrap().iter().map(vec_of).collect();
        let r = chi_square(&table).unwrap();
        assert!(close(r.statistic, f(&case["statistic"]), 1e-9));
        assert_eq!(r.df.unwrap(), f(&case["df"]));
        assert!(close(r.p_value, f(&case["p_value"]), 1e-6), "{} vs {}", r.p_value, case["p_value"]);
    }
}

#[test]
fn pearson_matches_reference() {
    for case in fixtures()["pearson_r"].as_array().unwrap() {
        let r = pearson_r(&vec_of(&case["x"]), &vec_of(&case["y"])).unwrap();
        assert!(close(r.r, f(&case["r"]), 1e-12));
        assert!(close(r.p_value, f(&case["p_value"]), 1e-6), "{} vs {}", r.p_value, case["p_value"]);
    }
}

#[test]
fn anova_and_tukey_match_reference() {
    for case in fixtures()["anova_tukey"].as_array().unwrap() {
        let groups: Vec<GroupSample> = case["groups"]
            .as_array()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, g)| GroupSample::new(format!("g{i}"), vec_of(g)))
            .collect();
        let r = anova_tukey(&groups).unwrap();
        assert!(close(r.f, f(&case["f"]), 1e-9));
        assert!(close(r.p_value, f(&case["p_value"]), 1e-6), "{} vs {}", r.p_value, case["p_value"]);
        for (i, row) in case["tukey_p"].as_array().unwrap().iter().enumerate() {
            for (j, want) in vec_of(row).into_iter().enumerate() {
                let got = r.pairwise_p[i][j];
                assert!((got - want).abs() < 1e-3, "tukey[{i}][{j}] {got} vs {want}");
            }
        }
    }
}

#[test]
fn shapiro_wilk_matches_reference() {
    for case in fixtures()["shapiro_wilk"].as_array().unwrap() {
        let x = vec_of(&case["x"]);
        let r = shapiro_wilk(&x).unwrap();
        assert!(close(r.w, f(&case["w"]), 1e-6), "w {} vs {}", r.w, case["w"]);
        assert!(close(r.p_value, f(&case["p_value"]), 1e-5), "p {} vs {}", r.p_value, case["p_value"]);
        let want = if f(&case["p_value"]) >= 0.05 { Normality::Normal } else { Normality::NonNormal };
        assert_eq!(normality_gate(&x).unwrap(), want);
    }
}
