//! Sleep episodes, minute-level sleep/wake grids and sleep regularity.

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: usize = 1440;
pub const GRID_DAYS: usize = 7;
/// A grid day counts toward regularity only with at least this many known minutes.
pub const MIN_COVERED_MINUTES: usize = 720;

/// One sleep episode, stored as it appears in `sleep.csv`.
///
/// The owning record is dated by the day the episode ends. If
/// `start_min >= end_min` the episode began on the previous day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SleepEpisode {
    pub start_min: u16,
    pub end_min: u16,
    pub duration_min: f64,
    pub efficiency: f64,
}

impl SleepEpisode {
    pub fn new(start_min: u16, end_min: u16, duration_min: f64, efficiency: f64) -> Result<Self> {
        if start_min as usize >= MINUTES_PER_DAY || end_min as usize >= MINUTES_PER_DAY {
            return Err(Error::InvalidStream(format!(
                "sleep episode minutes out of range: {start_min}-{end_min}"
            )));
        }
        if !(duration_min.is_finite() && duration_min >= 0.0) {
            return Err(Error::InvalidStream("sleep duration must be >= 0".into()));
        }
        if !(0.0..=100.0).contains(&efficiency) {
            return Err(Error::InvalidStream("sleep efficiency must be in [0, 100]".into()));
        }
        Ok(Self {
            start_min,
            end_min,
            duration_min,
            efficiency,
        })
    }

    /// Start and end relative to midnight of the record date; a start in
    /// `[-1440, 0)` lies on the previous day.
    pub fn span(&self) -> (i32, i32) {
        let start = self.start_min as i32;
        let end = self.end_min as i32;
        if start < end {
            (start, end)
        } else {
            (start - MINUTES_PER_DAY as i32, end)
        }
    }
}

/// All sleep ending on one calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct SleepRecord {
    pub participant_id: String,
    pub date: NaiveDate,
    pub episodes: Vec<SleepEpisode>,
}

impl SleepRecord {
    pub fn new(
        participant_id: impl Into<String>,
        date: NaiveDate,
        mut episodes: Vec<SleepEpisode>,
    ) -> Result<Self> {
        episodes.sort_by_key(|e| e.span().0);
        for pair in episodes.windows(2) {
            if pair[0].span().1 > pair[1].span().0 {
                return Err(Error::InvalidStream(format!(
                    "overlapping sleep episodes on {date}"
                )));
            }
        }
        Ok(Self {
            participant_id: participant_id.into(),
            date,
            episodes,
        })
    }

    /// Total minutes asleep.
    pub fn duration_min(&self) -> f64 {
        self.episodes.iter().map(|e| e.duration_min).sum()
    }

    /// Duration-weighted efficiency; plain mean when all durations are zero.
    pub fn efficiency(&self) -> Option<f64> {
        if self.episodes.is_empty() {
            return None;
        }
        let total = self.duration_min();
        if total > 0.0 {
            Some(
                self.episodes
                    .iter()
                    .map(|e| e.efficiency * e.duration_min)
                    .sum::<f64>()
                    / total,
            )
        } else {
            Some(self.episodes.iter().map(|e| e.efficiency).sum::<f64>() / self.episodes.len() as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SleepState {
    Sleep,
    Wake,
    Missing,
}

/// Seven consecutive days of minute-level sleep/wake state, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SleepMinuteGrid {
    days: Vec<Vec<SleepState>>,
}

impl SleepMinuteGrid {
    pub fn new(days: Vec<Vec<SleepState>>) -> Result<Self> {
        if days.len() != GRID_DAYS {
            return Err(Error::ShapeMismatch(format!(
                "sleep grid needs {GRID_DAYS} days, got {}",
                days.len()
            )));
        }
        if let Some(bad) = days.iter().find(|d| d.len() != MINUTES_PER_DAY) {
            return Err(Error::ShapeMismatch(format!(
                "sleep grid day has {} minutes",
                bad.len()
            )));
        }
        Ok(Self { days })
    }

    /// Builds a grid from boolean sleep masks with every minute known.
    pub fn from_masks(masks: &[Vec<bool>]) -> Result<Self> {
        Self::new(
            masks
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|&s| if s { SleepState::Sleep } else { SleepState::Wake })
                        .collect()
                })
                .collect(),
        )
    }

    pub fn days(&self) -> &[Vec<SleepState>] {
        &self.days
    }

    pub fn covered_minutes(&self, day: usize) -> usize {
        self.days[day]
            .iter()
            .filter(|s| **s != SleepState::Missing)
            .count()
    }
}

/// Fraction of minute pairs exactly 24 h apart whose sleep/wake state agrees,
/// over all pairs where both states are known.
pub fn sleep_regularity(grid: &SleepMinuteGrid) -> Result<f64> {
    let covered_days = (0..GRID_DAYS)
        .filter(|&d| grid.covered_minutes(d) >= MIN_COVERED_MINUTES)
        .count();
    if covered_days < 2 {
        return Err(Error::InsufficientCoverage(format!(
            "{covered_days} day(s) with >= {MIN_COVERED_MINUTES} known minutes"
        )));
    }
    let mut agree = 0u64;
    let mut total = 0u64;
    for pair in grid.days.windows(2) {
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            if *a == SleepState::Missing || *b == SleepState::Missing {
                continue;
            }
            total += 1;
            if a == b {
                agree += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InsufficientCoverage(
            "no overlapping known minutes 24 h apart".into(),
        ));
    }
    Ok(agree as f64 / total as f64)
}
