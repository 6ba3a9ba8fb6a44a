use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};

use crate::error::{Error, Result};
use crate::stats::descriptive::{mean, sample_sd};

/// Look-back horizons used for the rolling sleep and step features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    Three,
    Five,
    Seven,
}

impl Window {
    /// Order in which windows appear in the feature schema.
    pub const SCHEMA_ORDER: [Window; 3] = [Window::Seven, Window::Five, Window::Three];

    pub fn days(self) -> usize {
        match self {
            Window::Three => 3,
            Window::Five => 5,
            Window::Seven => 7,
        }
    }

    pub fn from_days(days: usize) -> Result<Self> {
        match days {
            3 => Ok(Window::Three),
            5 => Ok(Window::Five),
            7 => Ok(Window::Seven),
            other => Err(Error::Config(format!("rolling window must be 3, 5 or 7, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingStats {
    pub mean: f64,
    /// Sample SD; `None` with fewer than two days.
    pub sd: Option<f64>,
    pub days_used: usize,
}

/// Mean and SD of the values dated within `window` calendar days strictly
/// before `target`. Missing days are skipped rather than failing the window.
pub fn rolling_stats(
    daily_values: &BTreeMap<NaiveDate, f64>,
    target: NaiveDate,
    window: Window,
) -> Result<RollingStats> {
    let first = target - Duration::days(window.days() as i64);
    let values: Vec<f64> = daily_values
        .range(first..target)
        .map(|(_, v)| *v)
        .filter(|v| v.is_finite())
        .collect();
    let mean = mean(&values).ok_or(Error::NoHistory {
        window: window.days(),
    })?;
    Ok(RollingStats {
        mean,
        sd: sample_sd(&values),
        days_used: values.len(),
    })
}
