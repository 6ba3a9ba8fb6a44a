//! Daily feature engineering from minute-level wearable streams and surveys.
//!
//! The output of this module is one [`DailyFeatureVector`] per
//! participant-day, laid out by a versioned [`FeatureSchema`].

mod daily;
pub mod entropy;
pub mod io;
pub mod rolling;
pub mod sleep;

use std::str::FromStr;

use chrono::NaiveDate;

use crate::domain::Role;
use crate::error::{Error, Result};

pub use daily::{build_daily_vector, heart_rate_day_features, CohortData, HeartRateFeatures, ParticipantHistory};
pub use entropy::{
    extract_segments, information_entropy, sample_entropy, SampleEntropyParams, SegmentHistogram,
    SegmentKind,
};
pub use rolling::{rolling_stats, RollingStats, Window};
pub use sleep::{sleep_regularity, SleepEpisode, SleepMinuteGrid, SleepRecord, SleepState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    HeartRate,
    Steps,
}

/// Minute-resolution samples for one participant-day.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteStream {
    pub participant_id: String,
    pub date: NaiveDate,
    pub kind: StreamKind,
    /// `(minute_of_day, value)` with strictly increasing minutes.
    pub samples: Vec<(u16, f64)>,
}

impl MinuteStream {
    pub fn new(
        participant_id: impl Into<String>,
        date: NaiveDate,
        kind: StreamKind,
        samples: Vec<(u16, f64)>,
    ) -> Result<Self> {
        if samples.len() > sleep::MINUTES_PER_DAY {
            return Err(Error::InvalidStream(format!(
                "{} samples in one day",
                samples.len()
            )));
        }
        for pair in samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidStream(format!(
                    "minutes not strictly increasing at {}",
                    pair[1].0
                )));
            }
        }
        if let Some(&(m, v)) = samples
            .iter()
            .find(|(m, v)| *m as usize >= sleep::MINUTES_PER_DAY || !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidStream(format!("bad sample {v} at minute {m}")));
        }
        Ok(Self {
            participant_id: participant_id.into(),
            date,
            kind,
            samples,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|&(_, v)| v).collect()
    }

    pub fn total(&self) -> f64 {
        self.samples.iter().map(|&(_, v)| v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WakeType {
    Natural,
    Alarm,
    Other,
}

impl WakeType {
    pub const ALL: [WakeType; 3] = [WakeType::Natural, WakeType::Alarm, WakeType::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            WakeType::Natural => "natural",
            WakeType::Alarm => "alarm",
            WakeType::Other => "other",
        }
    }
}

impl FromStr for WakeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "natural" => Ok(WakeType::Natural),
            "alarm" => Ok(WakeType::Alarm),
            "other" => Ok(WakeType::Other),
            other => Err(Error::Data(format!("unknown wake_type `{other}`"))),
        }
    }
}

/// Scheduled shift: 1 = 08:30-16:30, 2 = 16:30-00:30, 3 = 00:30-08:30.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkShift {
    Shift1,
    Shift2,
    Shift3,
    None,
}

impl WorkShift {
    pub const WORKED: [WorkShift; 3] = [WorkShift::Shift1, WorkShift::Shift2, WorkShift::Shift3];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkShift::Shift1 => "1",
            WorkShift::Shift2 => "2",
            WorkShift::Shift3 => "3",
            WorkShift::None => "none",
        }
    }
}

impl FromStr for WorkShift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "shift1" => Ok(WorkShift::Shift1),
            "2" | "shift2" => Ok(WorkShift::Shift2),
            "3" | "shift3" => Ok(WorkShift::Shift3),
            "none" | "" | "0" | "off" => Ok(WorkShift::None),
            other => Err(Error::Data(format!("unknown shift `{other}`"))),
        }
    }
}

/// Daily questionnaire answers.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDay {
    pub participant_id: String,
    pub date: NaiveDate,
    /// Ordinal bin: 0-5, 6-15, 16-30, 31-45, 45-60, 60+ minutes.
    pub time_to_fall_asleep_bin: u8,
    pub wake_type: WakeType,
    pub nap_count: u32,
    pub nap_duration_min: f64,
    pub work_shift: WorkShift,
    pub work_duration_hr: f64,
    pub overwork_min: f64,
    pub caffeine_cups: u32,
    pub alcohol_or_drug: bool,
}

impl SurveyDay {
    pub fn validate(&self) -> Result<()> {
        if self.time_to_fall_asleep_bin > 5 {
            return Err(Error::Data(format!(
                "ttfa_bin {} outside 0-5",
                self.time_to_fall_asleep_bin
            )));
        }
        for (name, v) in [
            ("nap_min", self.nap_duration_min),
            ("work_hr", self.work_duration_hr),
            ("overwork_min", self.overwork_min),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Data(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// Canonical feature order. Rolling blocks run over windows 7, 5, 3.
pub const FEATURE_NAMES: [&str; 40] = [
    "hr_mean",
    "hr_sd",
    "hr_sampen",
    "sleep_duration",
    "sleep_efficiency",
    "sleep_regularity",
    "sleep_dur_mean_7",
    "sleep_dur_sd_7",
    "sleep_eff_mean_7",
    "sleep_eff_sd_7",
    "sleep_dur_mean_5",
    "sleep_dur_sd_5",
    "sleep_eff_mean_5",
    "sleep_eff_sd_5",
    "sleep_dur_mean_3",
    "sleep_dur_sd_3",
    "sleep_eff_mean_3",
    "sleep_eff_sd_3",
    "time_to_fall_asleep_bin",
    "wake_natural",
    "wake_alarm",
    "wake_other",
    "nap_count",
    "nap_duration",
    "steps_total",
    "steps_mean_7",
    "steps_sd_7",
    "steps_mean_5",
    "steps_sd_5",
    "steps_mean_3",
    "steps_sd_3",
    "entropy_stationary",
    "entropy_active",
    "shift1",
    "shift2",
    "shift3",
    "work_duration",
    "overwork",
    "caffeine_cups",
    "alcohol_or_drug",
];

/// Ordered, versioned list of feature names fed to the models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub version: u32,
    pub names: Vec<String>,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FeatureSchema {
    /// A schema over any ordered subset of the known features.
    pub fn subset(names: &[&str]) -> Result<Self> {
        for n in names {
            if !FEATURE_NAMES.contains(n) {
                return Err(Error::Config(format!("unknown feature `{n}`")));
            }
        }
        Ok(Self {
            version: SCHEMA_VERSION,
            names: names.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// One-hot groups present in this schema, as lists of column indices.
    pub fn one_hot_groups(&self) -> Vec<Vec<usize>> {
        [
            &["wake_natural", "wake_alarm", "wake_other"][..],
            &["shift1", "shift2", "shift3"][..],
        ]
        .iter()
        .map(|g| g.iter().filter_map(|n| self.index_of(n)).collect::<Vec<_>>())
        .filter(|g: &Vec<usize>| !g.is_empty())
        .collect()
    }
}

/// One schema-ordered feature row. Missing entries hold NaN and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyFeatureVector {
    pub participant_id: String,
    pub date: NaiveDate,
    pub role: Role,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl DailyFeatureVector {
    pub fn get(&self, schema: &FeatureSchema, name: &str) -> Option<f64> {
        let i = schema.index_of(name)?;
        (!self.missing[i]).then_some(self.values[i])
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }
}
