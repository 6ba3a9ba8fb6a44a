use crate::error::{Error, Result};
use crate::model::TaskMode;

/// Class views over the 0-100 label scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelView {
    /// low 0-50, high 51-100.
    Binary,
    /// low 0-33, mid 34-66, high 67-100.
    ThreeClass,
}

impl LabelView {
    pub fn from_task(task: TaskMode) -> Option<Self> {
        match task {
            TaskMode::Binary => Some(LabelView::Binary),
            TaskMode::ThreeClass => Some(LabelView::ThreeClass),
            TaskMode::Regression => None,
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            LabelView::Binary => 2,
            LabelView::ThreeClass => 3,
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            LabelView::Binary => &["low", "high"],
            LabelView::ThreeClass => &["low", "mid", "high"],
        }
    }
}

/// Class index of a 0-100 score. Values between the integer cut points
/// fall to the upper class (50.5 is high).
pub fn discretize(value: f64, view: LabelView) -> Result<usize> {
    if !(0.0..=100.0).contains(&value) {
        return Err(Error::OutOfRange(value));
    }
    Ok(match view {
        LabelView::Binary => usize::from(value > 50.0),
        LabelView::ThreeClass => {
            if value <= 33.0 {
                0
            } else if value <= 66.0 {
                1
            } else {
                2
            }
        }
    })
}

pub fn discretize_all(values: &[f64], view: LabelView) -> Result<Vec<usize>> {
    values.iter().map(|v| discretize(*v, view)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    /// Mean f1 over classes present in the truth or the predictions.
    pub macro_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

/// Per-class precision, recall and f1 with 0 for empty denominators.
pub fn f1_score(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<F1Report> {
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if let Some(&c) = y_true.iter().chain(y_pred).find(|&&c| c >= n_classes) {
        return Err(Error::InvalidClass { class: c, n_classes });
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fneg = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision: Vec<f64> = (0..n_classes).map(|c| ratio(tp[c], tp[c] + fp[c])).collect();
    let recall: Vec<f64> = (0..n_classes).map(|c| ratio(tp[c], tp[c] + fneg[c])).collect();
    let f1: Vec<f64> = (0..n_classes)
        .map(|c| {
            let s = precision[c] + recall[c];
            if s == 0.0 {
                0.0
            } else {
                2.0 * precision[c] * recall[c] / s
            }
        })
        .collect();
    let present: Vec<usize> = (0..n_classes).filter(|&c| tp[c] + fp[c] + fneg[c] > 0).collect();
    let macro_f1 = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|&c| f1[c]).sum::<f64>() / present.len() as f64
    };
    Ok(F1Report {
        macro_f1,
        precision,
        recall,
        f1,
    })
}

/// Mean absolute error on the 0-100 scale.
pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} true values vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InsufficientRows { needed: 1, got: 0 });
    }
    Ok(y_true.iter().zip(y_pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / y_true.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_boundaries() {
        assert_eq!(discretize(50.0, LabelView::Binary).unwrap(), 0);
        assert_eq!(discretize(51.0, LabelView::Binary).unwrap(), 1);
        assert_eq!(discretize(0.0, LabelView::Binary).unwrap(), 0);
        assert_eq!(discretize(100.0, LabelView::Binary).unwrap(), 1);
    }

    #[test]
    fn three_class_boundaries() {
        let v = LabelView::ThreeClass;
        assert_eq!(discretize(33.0, v).unwrap(), 0);
        assert_eq!(discretize(34.0, v).unwrap(), 1);
        assert_eq!(discretize(66.0, v).unwrap(), 1);
        assert_eq!(discretize(67.0, v).unwrap(), 2);
        assert_eq!(discretize(0.0, v).unwrap(), 0);
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(discretize(100.5, LabelView::Binary), Err(Error::OutOfRange(_))));
        assert!(matches!(discretize(-1.0, LabelView::ThreeClass), Err(Error::OutOfRange(_))));
        assert!(discretize(f64::NAN, LabelView::Binary).is_err());
    }

    #[test]
    fn f1_hand_cases() {
        let r = f1_score(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert!(r.precision.iter().chain(&r.recall).all(|v| *v == 1.0));

        let r = f1_score(&[0, 0, 1, 1], &[0, 0, 0, 0], 2).unwrap();
        assert_eq!(r.precision[1], 0.0);
        assert_eq!(r.recall[1], 0.0);
        assert!((r.f1[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-12);

        let r = f1_score(&[1, 1, 1], &[1, 1, 1], 2).unwrap();
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn f1_rejects_bad_input() {
        assert!(matches!(f1_score(&[0], &[0, 1], 2), Err(Error::ShapeMismatch(_))));
        assert!(matches!(f1_score(&[2], &[0], 2), Err(Error::InvalidClass { .. })));
    }

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[10.0, 20.0, 30.0], &[15.0, 25.0, 35.0]).unwrap(), 5.0);
        assert!((mae(&[0.0, 10.0, 50.0, 100.0], &[3.0, 4.0, 52.5, 90.0]).unwrap() - (3.0 + 6.0 + 2.5 + 10.0) / 4.0).abs() < 1e-12);
        assert!(matches!(mae(&[1.0], &[]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn random_binary_predictor_f1_near_half() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t: Vec<usize> = (0..10_000).map(|i| i % 2).collect();
        let p: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
        let r = f1_score(&t, &p, 2).unwrap();
        assert!((r.macro_f1 - 0.5).abs() < 0.05, "{}", r.macro_f1);
    }

    proptest! {
        #[test]
        fn discretize_total_and_monotone(a in 0.0f64..=100.0, b in 0.0f64..=100.0) {
            for view in [LabelView::Binary, LabelView::ThreeClass] {
                let ca = discretize(a, view).unwrap();
                let cb = discretize(b, view).unwrap();
                prop_assert!(ca < view.n_classes());
                if a <= b { prop_assert!(ca <= cb); }
            }
        }

        #[test]
        fn integer_scores_map_by_quoted_ranges(v in 0u32..=100) {
            let x = f64::from(v);
            prop_assert_eq!(discretize(x, LabelView::Binary).unwrap(), usize::from(v >= 51));
            let want = if v >= 67 { 2 } else if v >= 34 { 1 } else { 0 };
            prop_assert_eq!(discretize(x, LabelView::ThreeClass).unwrap(), want);
        }

        #[test]
        fn f1_bounded(pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..60)) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let r = f1_score(&t, &p, 3).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.macro_f1));
            for c in 0..3 {
                prop_assert!((0.0..=1.0).contains(&r.precision[c]));
                prop_assert!((0.0..=1.0).contains(&r.recall[c]));
            }
        }
    }
}
