//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use shiftwell::features::sleep::{MINUTES_PER_DAY, MIN_COVERED_MINUTES};
use shiftwell::features::SleepState;

// Textbook sample entropy: build every template, count pairs at each length
// separately with the full Chebyshev distance, no shared work.
pub fn naive_sample_entropy(x: &[f64], m: usize, r_factor: f64) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let r = r_factor * sd;
    let count = |len: usize| {
        let templates: Vec<&[f64]> = (0..n - m).map(|i| &x[i..i + len]).collect();
        let mut c = 0u64;
        for i in 0..templates.len() {
            for j in 0..templates.len() {
                if i == j {
                    continue;
                }
                let d = templates[i]
                    .iter()
                    .zip(templates[j])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if d < r {
                    c += 1;
                }
            }
        }
        c
    };
    let b = count(m);
    let a = count(m + 1);
    if a == 0 || b == 0 {
        (((n - m) * (n - m - 1)) as f64).ln()
    } else {
        -(a as f64 / b as f64).ln()
    }
}

// Every minute compared with the same minute one day later.
pub fn naive_regularity(days: &[Vec<SleepState>]) -> Option<f64> {
    let flat: Vec<SleepState> = days.concat();
    let covered = days
        .iter()
        .filter(|d| d.iter().filter(|s| **s != SleepState::Missing).count() >= MIN_COVERED_MINUTES)
        .count();
    let (mut agree, mut total) = (0u64, 0u64);
    for t in 0..flat.len() - MINUTES_PER_DAY {
        let (a, b) = (flat[t], flat[t + MINUTES_PER_DAY]);
        if a != SleepState::Missing && b != SleepState::Missing {
            total += 1;
            agree += u64::from(a == b);
        }
    }
    (covered >= 2 && total > 0).then(|| agree as f64 / total as f64)
}

