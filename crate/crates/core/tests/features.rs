use proptest::prelude::*;
mod common;

use common::{naive_regularity, naive_sample_entropy};
use shiftwell::features::sleep::{GRID_DAYS, MINUTES_PER_DAY};
use shiftwell::features::{sample_entropy, sleep_regularity, SampleEntropyParams, SleepMinuteGrid, SleepState};

fn heart_rate_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(50u32..120, 20..=500).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sample_entropy_matches_naive_oracle(x in heart_rate_series()) {
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let fast = sample_entropy(&x, &SampleEntropyParams::default()).unwrap();
        let slow = naive_sample_entropy(&x, 2, 0.2);
        prop_assert_eq!(fast.to_bits(), slow.to_bits());
    }

    #[test]
    fn sample_entropy_matches_oracle_on_continuous_series(
        x in prop::collection::vec(-3.0f64..3.0, 20..=500),
        m in 1usize..4,
    ) {
        let p = SampleEntropyParams::new(m, 0.2).unwrap();
        let fast = sample_entropy(&x, &p).unwrap();
        prop_assert_eq!(fast.to_bits(), naive_sample_entropy(&x, m, 0.2).to_bits());
    }

    #[test]
    fn sample_entropy_scale_and_shift_invariant(
        x in heart_rate_series(),
        scale_pow in -3i32..4,
        shift in -200i32..200,
    ) {
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let p = SampleEntropyParams::default();
        let base = sample_entropy(&x, &p).unwrap();
        let s = 2f64.powi(scale_pow);
        let y: Vec<f64> = x.iter().map(|v| v * s + f64::from(shift)).collect();
        prop_assert!((sample_entropy(&y, &p).unwrap() - base).abs() <= 1e-12);
    }

    #[test]
    fn regularity_matches_pair_count_oracle(
        seeds in prop::collection::vec((0usize..1440, 0usize..900, 0usize..1440, 0usize..400), GRID_DAYS),
    ) {
        let days: Vec<Vec<SleepState>> = seeds
            .iter()
            .map(|&(onset, len, gap_start, gap_len)| {
                (0..MINUTES_PER_DAY)
                    .map(|t| {
                        if (gap_start..gap_start + gap_len).contains(&t) {
                            SleepState::Missing
                        } else if (t + MINUTES_PER_DAY - onset) % MINUTES_PER_DAY < len {
                            SleepState::Sleep
                        } else {
                            SleepState::Wake
                        }
                    })
                    .collect()
            })
            .collect();
        let grid = SleepMinuteGrid::new(days.clone()).unwrap();
        match (sleep_regularity(&grid), naive_regularity(&days)) {
            (Ok(a), Some(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "implementation {:?} vs oracle {:?}", a, b),
        }
    }
}

#[test]
fn regularity_closed_forms() {
    let day: Vec<bool> = (0..MINUTES_PER_DAY).map(|t| !(420..1380).contains(&t)).collect();
    let grid = SleepMinuteGrid::from_masks(&vec![day.clone(); GRID_DAYS]).unwrap();
    assert_eq!(sleep_regularity(&grid).unwrap(), 1.0);

    let inv: Vec<bool> = day.iter().map(|b| !b).collect();
    let alternating: Vec<Vec<bool>> = (0..GRID_DAYS)
        .map(|i| if i % 2 == 0 { day.clone() } else { inv.clone() })
        .collect();
    let grid = SleepMinuteGrid::from_masks(&alternating).unwrap();
    assert_eq!(sleep_regularity(&grid).unwrap(), 0.0);
}

#[test]
fn constant_series_has_no_entropy() {
    assert!(sample_entropy(&[70.0; 50], &SampleEntropyParams::default()).is_err());
}
