use std::collections::{BTreeMap, HashMap};

use chrono::{Duration, NaiveDate};

use super::entropy::{extract_segments, information_entropy, sample_entropy, SampleEntropyParams};
use super::rolling::{rolling_stats, Window};
use super::sleep::{sleep_regularity, SleepMinuteGrid, SleepRecord, SleepState, GRID_DAYS, MINUTES_PER_DAY};
use super::{DailyFeatureVector, FeatureSchema, MinuteStream, StreamKind, SurveyDay, WakeType, WorkShift, FEATURE_NAMES};
use crate::domain::Role;
use crate::error::{Error, Result};
use crate::stats::descriptive::{mean, sample_sd};

/// Days with fewer present heart-rate minutes are rejected.
pub const MIN_HR_MINUTES: usize = 60;
/// Gaps of at most this many missing minutes are linearly interpolated
/// before sample entropy.
pub const MAX_INTERPOLATED_GAP: u16 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeartRateFeatures {
    pub mean: f64,
    pub sd: f64,
    /// `None` when sample entropy is undefined for the day (e.g. a flat trace).
    pub sample_entropy: Option<f64>,
}

/// Daily mean, SD and sample entropy of a heart-rate stream.
pub fn heart_rate_day_features(hr: &MinuteStream) -> Result<HeartRateFeatures> {
    if hr.kind != StreamKind::HeartRate {
        return Err(Error::InvalidStream("expected a heart-rate stream".into()));
    }
    if hr.samples.len() < MIN_HR_MINUTES {
        return Err(Error::TooSparse {
            present: hr.samples.len(),
            needed: MIN_HR_MINUTES,
        });
    }
    let values = hr.values();
    let mean = mean(&values).expect("non-empty");
    let sd = sample_sd(&values).expect(">= 2 samples");

    let mut series = Vec::with_capacity(MINUTES_PER_DAY);
    for (k, &(minute, value)) in hr.samples.iter().enumerate() {
        if k > 0 {
            let (prev_minute, prev_value) = hr.samples[k - 1];
            let missing = minute - prev_minute - 1;
            if missing > 0 && missing <= MAX_INTERPOLATED_GAP {
                let steps = f64::from(missing + 1);
                for s in 1..=missing {
                    let t = f64::from(s) / steps;
                    series.push(prev_value + (value - prev_value) * t);
                }
            }
        }
        series.push(value);
    }
    let sample_entropy = sample_entropy(&series, &SampleEntropyParams::default()).ok();
    Ok(HeartRateFeatures {
        mean,
        sd,
        sample_entropy,
    })
}

/// Every stream and record for one participant, keyed by date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticipantHistory {
    pub participant_id: String,
    pub heart_rate: BTreeMap<NaiveDate, MinuteStream>,
    pub steps: BTreeMap<NaiveDate, MinuteStream>,
    /// Sleep records keyed by the day the sleep ended.
    pub sleep: BTreeMap<NaiveDate, SleepRecord>,
    pub surveys: BTreeMap<NaiveDate, SurveyDay>,
}

impl ParticipantHistory {
    pub fn new(participant_id: impl Into<String>) -> Self {
        Self {
            participant_id: participant_id.into(),
            ..Default::default()
        }
    }

    fn daily_sleep_duration(&self) -> BTreeMap<NaiveDate, f64> {
        self.sleep.iter().map(|(d, r)| (*d, r.duration_min())).collect()
    }

    fn daily_sleep_efficiency(&self) -> BTreeMap<NaiveDate, f64> {
        self.sleep
            .iter()
            .filter_map(|(d, r)| r.efficiency().map(|e| (*d, e)))
            .collect()
    }

    fn daily_steps(&self) -> BTreeMap<NaiveDate, f64> {
        self.steps.iter().map(|(d, s)| (*d, s.total())).collect()
    }

    /// Minutes of `day` spent asleep, including episodes that began on `day`
    /// and ended after midnight.
    pub fn sleep_mask(&self, day: NaiveDate) -> Vec<bool> {
        let mut mask = vec![false; MINUTES_PER_DAY];
        let mut mark = |from: i32, to: i32| {
            for t in from.max(0)..to.min(MINUTES_PER_DAY as i32) {
                mask[t as usize] = true;
            }
        };
        if let Some(rec) = self.sleep.get(&day) {
            for e in &rec.episodes {
                let (s, end) = e.span();
                mark(s, end);
            }
        }
        if let Some(rec) = self.sleep.get(&(day + Duration::days(1))) {
            for e in &rec.episodes {
                let (s, end) = e.span();
                mark(s + MINUTES_PER_DAY as i32, end + MINUTES_PER_DAY as i32);
            }
        }
        mask
    }

    /// Sleep/wake state per minute; a minute is known if asleep or if heart
    /// rate was recorded (the device was worn).
    pub fn sleep_states(&self, day: NaiveDate) -> Vec<SleepState> {
        let mask = self.sleep_mask(day);
        let mut states: Vec<SleepState> = mask
            .iter()
            .map(|&s| if s { SleepState::Sleep } else { SleepState::Missing })
            .collect();
        if let Some(hr) = self.heart_rate.get(&day) {
            for &(m, _) in &hr.samples {
                let st = &mut states[m as usize];
                if *st == SleepState::Missing {
                    *st = SleepState::Wake;
                }
            }
        }
        states
    }

    /// Seven-day grid ending on `day`.
    pub fn sleep_grid(&self, day: NaiveDate) -> SleepMinuteGrid {
        let days = (0..GRID_DAYS as i64)
            .rev()
            .map(|back| self.sleep_states(day - Duration::days(back)))
            .collect();
        SleepMinuteGrid::new(days).expect("grid shape is fixed")
    }
}

/// Participant registry plus every participant's history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CohortData {
    pub roles: BTreeMap<String, Role>,
    pub histories: BTreeMap<String, ParticipantHistory>,
}

impl CohortData {
    pub fn role_of(&self, participant_id: &str) -> Result<Role> {
        self.roles
            .get(participant_id)
            .copied()
            .ok_or_else(|| Error::UnknownParticipant(participant_id.to_string()))
    }

    pub fn daily_vector(
        &self,
        participant_id: &str,
        day: NaiveDate,
        schema: &FeatureSchema,
    ) -> Result<DailyFeatureVector> {
        let role = self.role_of(participant_id)?;
        let history = self
            .histories
            .get(participant_id)
            .ok_or_else(|| Error::UnknownParticipant(participant_id.to_string()))?;
        build_daily_vector(history, role, day, schema)
    }

    /// Feature vectors for every surveyed participant-day, ordered by
    /// participant then date. Survey days without a registered role are an
    /// error; days that cannot be built for other reasons are skipped.
    pub fn all_daily_vectors(&self, schema: &FeatureSchema) -> Result<Vec<DailyFeatureVector>> {
        let mut out = Vec::new();
        for (pid, history) in &self.histories {
            let role = self.role_of(pid)?;
            for day in history.surveys.keys() {
                out.push(build_daily_vector(history, role, *day, schema)?);
            }
        }
        Ok(out)
    }
}

/// Builds the schema-ordered feature vector for one participant-day from
/// data up to and including `day`.
pub fn build_daily_vector(
    history: &ParticipantHistory,
    role: Role,
    day: NaiveDate,
    schema: &FeatureSchema,
) -> Result<DailyFeatureVector> {
    let survey = history.surveys.get(&day).ok_or_else(|| Error::MissingSurvey {
        participant: history.participant_id.clone(),
        date: day.to_string(),
    })?;
    let mut f: HashMap<&'static str, Option<f64>> = HashMap::with_capacity(FEATURE_NAMES.len());

    let hr = history
        .heart_rate
        .get(&day)
        .and_then(|s| heart_rate_day_features(s).ok());
    f.insert("hr_mean", hr.map(|h| h.mean));
    f.insert("hr_sd", hr.map(|h| h.sd));
    f.insert("hr_sampen", hr.and_then(|h| h.sample_entropy));

    let sleep_today = history.sleep.get(&day);
    f.insert("sleep_duration", sleep_today.map(|r| r.duration_min()));
    f.insert("sleep_efficiency", sleep_today.and_then(|r| r.efficiency()));
    f.insert("sleep_regularity", sleep_regularity(&history.sleep_grid(day)).ok());

    let durations = history.daily_sleep_duration();
    let efficiencies = history.daily_sleep_efficiency();
    let step_totals = history.daily_steps();
    for w in Window::SCHEMA_ORDER {
        let n = w.days();
        let dur = rolling_stats(&durations, day, w).ok();
        let eff = rolling_stats(&efficiencies, day, w).ok();
        let steps = rolling_stats(&step_totals, day, w).ok();
        f.insert(name(&format!("sleep_dur_mean_{n}")), dur.map(|s| s.mean));
        f.insert(name(&format!("sleep_dur_sd_{n}")), dur.and_then(|s| s.sd));
        f.insert(name(&format!("sleep_eff_mean_{n}")), eff.map(|s| s.mean));
        f.insert(name(&format!("sleep_eff_sd_{n}")), eff.and_then(|s| s.sd));
        f.insert(name(&format!("steps_mean_{n}")), steps.map(|s| s.mean));
        f.insert(name(&format!("steps_sd_{n}")), steps.and_then(|s| s.sd));
    }

    f.insert("time_to_fall_asleep_bin", Some(f64::from(survey.time_to_fall_asleep_bin)));
    for (key, wt) in ["wake_natural", "wake_alarm", "wake_other"]
        .into_iter()
        .zip(WakeType::ALL)
    {
        f.insert(key, Some(if survey.wake_type == wt { 1.0 } else { 0.0 }));
    }
    f.insert("nap_count", Some(f64::from(survey.nap_count)));
    f.insert("nap_duration", Some(survey.nap_duration_min));

    let steps_today = history.steps.get(&day);
    f.insert("steps_total", steps_today.map(MinuteStream::total));
    let (stationary, active) = match steps_today {
        Some(s) => {
            let (st, ac) = extract_segments(s, &history.sleep_mask(day));
            (information_entropy(&st).ok(), information_entropy(&ac).ok())
        }
        None => (None, None),
    };
    f.insert("entropy_stationary", stationary);
    f.insert("entropy_active", active);

    // A day off encodes as all-zero shift indicators.
    for (key, shift) in ["shift1", "shift2", "shift3"].into_iter().zip(WorkShift::WORKED) {
        f.insert(key, Some(if survey.work_shift == shift { 1.0 } else { 0.0 }));
    }
    f.insert("work_duration", Some(survey.work_duration_hr));
    f.insert("overwork", Some(survey.overwork_min));
    f.insert("caffeine_cups", Some(f64::from(survey.caffeine_cups)));
    f.insert("alcohol_or_drug", Some(if survey.alcohol_or_drug { 1.0 } else { 0.0 }));

    let mut values = Vec::with_capacity(schema.len());
    let mut missing = Vec::with_capacity(schema.len());
    for n in &schema.names {
        let v = f
            .get(n.as_str())
            .ok_or_else(|| Error::Config(format!("unknown feature `{n}`")))?;
        match v {
            Some(x) if x.is_finite() => {
                values.push(*x);
                missing.push(false);
            }
            _ => {
                values.push(f64::NAN);
                missing.push(true);
            }
        }
    }
    Ok(DailyFeatureVector {
        participant_id: history.participant_id.clone(),
        date: day,
        role,
        values,
        missing,
    })
}

fn name(s: &str) -> &'static str {
    FEATURE_NAMES
        .iter()
        .find(|n| **n == s)
        .copied()
        .expect("feature name is in the canonical schema")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::sleep::SleepEpisode;

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 6, 1).unwrap() + Duration::days(n)
    }

    fn survey(pid: &str, d: NaiveDate, overwork: f64) -> SurveyDay {
        SurveyDay {
            participant_id: pid.into(),
            date: d,
            time_to_fall_asleep_bin: 1,
            wake_type: WakeType::Alarm,
            nap_count: 1,
            nap_duration_min: 20.0,
            work_shift: WorkShift::Shift2,
            work_duration_hr: 8.0,
            overwork_min: overwork,
            caffeine_cups: 2,
            alcohol_or_drug: false,
        }
    }

    fn history(days: i64, with_steps: bool) -> ParticipantHistory {
        let mut h = ParticipantHistory::new("p1");
        for i in 0..days {
            let d = day(i);
            let hr: Vec<(u16, f64)> = (0..1440u16)
                .map(|m| (m, 70.0 + 10.0 * ((m as f64 + i as f64 * 37.0) * 0.37).sin()))
                .collect();
            h.heart_rate
                .insert(d, MinuteStream::new("p1", d, StreamKind::HeartRate, hr).unwrap());
            if with_steps {
                let st: Vec<(u16, f64)> = (0..1440u16)
                    .map(|m| (m, if (m / 7 + i as u16).is_multiple_of(3) { 12.0 } else { 0.0 }))
                    .collect();
                h.steps
                    .insert(d, MinuteStream::new("p1", d, StreamKind::Steps, st).unwrap());
            }
            h.sleep.insert(
                d,
                SleepRecord::new(
                    "p1",
                    d,
                    vec![SleepEpisode::new(1380 - i as u16, 400, 380.0 + i as f64, 92.0).unwrap()],
                )
                .unwrap(),
            );
            h.surveys.insert(d, survey("p1", d, 200.0));
        }
        h
    }

    #[test]
    fn flat_heart_rate_has_no_entropy() {
        let hr: Vec<(u16, f64)> = (0..1440u16).map(|m| (m, 70.0)).collect();
        let s = MinuteStream::new("p", day(0), StreamKind::HeartRate, hr).unwrap();
        let f = heart_rate_day_features(&s).unwrap();
        assert_eq!((f.mean, f.sd, f.sample_entropy), (70.0, 0.0, None));
    }

    #[test]
    fn sparse_heart_rate_is_rejected() {
        let hr: Vec<(u16, f64)> = (0..59u16).map(|m| (m * 10, 70.0 + m as f64)).collect();
        let s = MinuteStream::new("p", day(0), StreamKind::HeartRate, hr).unwrap();
        assert_eq!(
            heart_rate_day_features(&s),
            Err(Error::TooSparse { present: 59, needed: 60 })
        );
        let hr: Vec<(u16, f64)> = (0..60u16).map(|m| (m * 10, 70.0 + (m % 7) as f64)).collect();
        let s = MinuteStream::new("p", day(0), StreamKind::HeartRate, hr).unwrap();
        assert!(heart_rate_day_features(&s).is_ok());
    }

    #[test]
    fn fully_present_day_has_no_missing_entries() {
        let h = history(8, true);
        let v = build_daily_vector(&h, Role::Doctor, day(7), &FeatureSchema::default()).unwrap();
        assert_eq!(v.values.len(), 40);
        assert_eq!(v.missing_count(), 0, "{:?}", v.missing);
        let schema = FeatureSchema::default();
        assert_eq!(v.get(&schema, "overwork"), Some(200.0));
        assert_eq!(v.get(&schema, "shift2"), Some(1.0));
        assert_eq!(v.get(&schema, "shift1"), Some(0.0));
    }

    #[test]
    fn missing_steps_flag_only_step_features() {
        let h = history(8, false);
        let schema = FeatureSchema::default();
        let v = build_daily_vector(&h, Role::Nurse, day(7), &schema).unwrap();
        let flagged: Vec<&str> = schema
            .names
            .iter()
            .zip(&v.missing)
            .filter(|(_, m)| **m)
            .map(|(n, _)| n.as_str())
            .collect();
        assert_eq!(
            flagged,
            vec![
                "steps_total",
                "steps_mean_7",
                "steps_sd_7",
                "steps_mean_5",
                "steps_sd_5",
                "steps_mean_3",
                "steps_sd_3",
                "entropy_stationary",
                "entropy_active"
            ]
        );
    }

    #[test]
    fn first_day_lacks_history() {
        let h = history(3, true);
        let schema = FeatureSchema::default();
        let v = build_daily_vector(&h, Role::Nurse, day(0), &schema).unwrap();
        assert!(v.get(&schema, "sleep_dur_mean_7").is_none());
        assert!(v.get(&schema, "sleep_regularity").is_none());
        assert!(v.get(&schema, "hr_mean").is_some());
    }

    #[test]
    fn missing_survey_and_unknown_participant() {
        let h = history(2, true);
        let schema = FeatureSchema::default();
        assert!(matches!(
            build_daily_vector(&h, Role::Nurse, day(5), &schema),
            Err(Error::MissingSurvey { .. })
        ));
        let cohort = CohortData {
            roles: BTreeMap::new(),
            histories: [("p1".to_string(), h)].into_iter().collect(),
        };
        assert_eq!(
            cohort.daily_vector("p1", day(0), &schema),
            Err(Error::UnknownParticipant("p1".into()))
        );
    }

    #[test]
    fn build_is_deterministic() {
        let h = history(8, true);
        let schema = FeatureSchema::default();
        let a = build_daily_vector(&h, Role::Nurse, day(6), &schema).unwrap();
        let b = build_daily_vector(&h, Role::Nurse, day(6), &schema).unwrap();
        let bits = |v: &DailyFeatureVector| v.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn sleep_mask_includes_evening_onset() {
        let h = history(3, true);
        let mask = h.sleep_mask(day(1));
        // record for day 2 began at 1378 on day 1
        assert!(mask[1379]);
        assert!(!mask[1377]);
        assert!(mask[0] && mask[399] && !mask[400]);
    }
}
