//! CSV ingestion of raw bundles and (de)serialization of `features.csv`.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::daily::{CohortData, ParticipantHistory};
use super::sleep::{SleepEpisode, SleepRecord};
use super::{DailyFeatureVector, FeatureSchema, MinuteStream, StreamKind, SurveyDay};
use crate::domain::Role;
use crate::error::{Error, Result};
use crate::util::{fmt_num, parse_date};

pub const HR_FILE: &str = "hr.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const SLEEP_FILE: &str = "sleep.csv";
pub const SURVEY_FILE: &str = "survey.csv";
pub const PARTICIPANTS_FILE: &str = "participants.csv";
pub const FEATURES_FILE: &str = "features.csv";

#[derive(Debug, Serialize, Deserialize)]
pub struct HrRow {
    pub participant_id: String,
    pub date: String,
    pub minute: u16,
    pub bpm: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepsRow {
    pub participant_id: String,
    pub date: String,
    pub minute: u16,
    pub steps: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SleepRow {
    pub participant_id: String,
    pub date: String,
    pub start_min: u16,
    pub end_min: u16,
    pub duration_min: f64,
    pub efficiency: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SurveyRow {
    pub participant_id: String,
    pub date: String,
    pub ttfa_bin: u8,
    pub wake_type: String,
    pub nap_count: u32,
    pub nap_min: f64,
    pub shift: String,
    pub work_hr: f64,
    pub overwork_min: f64,
    pub caffeine: u32,
    pub alc_drug: u8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ParticipantRow {
    pub participant_id: String,
    pub role: String,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::Data(format!("{}: {e}", path.display()))))
        .collect()
}

fn group_minutes(
    rows: impl Iterator<Item = (String, String, u16, f64)>,
    kind: StreamKind,
) -> Result<BTreeMap<(String, NaiveDate), MinuteStream>> {
    let mut grouped: BTreeMap<(String, NaiveDate), Vec<(u16, f64)>> = BTreeMap::new();
    for (pid, date, minute, value) in rows {
        grouped
            .entry((pid, parse_date(&date)?))
            .or_default()
            .push((minute, value));
    }
    grouped
        .into_iter()
        .map(|((pid, date), mut samples)| {
            samples.sort_by_key(|s| s.0);
            let stream = MinuteStream::new(pid.clone(), date, kind, samples)
                .map_err(|e| Error::Data(format!("{pid} {date}: {e}")))?;
            Ok(((pid, date), stream))
        })
        .collect()
}

pub fn read_participants(path: &Path) -> Result<BTreeMap<String, Role>> {
    read_rows::<ParticipantRow>(path)?
        .into_iter()
        .map(|r| Ok((r.participant_id, r.role.parse::<Role>()?)))
        .collect()
}

impl SurveyRow {
    pub fn into_survey(self) -> Result<SurveyDay> {
        let s = SurveyDay {
            date: parse_date(&self.date)?,
            participant_id: self.participant_id,
            time_to_fall_asleep_bin: self.ttfa_bin,
            wake_type: self.wake_type.parse()?,
            nap_count: self.nap_count,
            nap_duration_min: self.nap_min,
            work_shift: self.shift.parse()?,
            work_duration_hr: self.work_hr,
            overwork_min: self.overwork_min,
            caffeine_cups: self.caffeine,
            alcohol_or_drug: self.alc_drug != 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_survey(s: &SurveyDay) -> Self {
        SurveyRow {
            participant_id: s.participant_id.clone(),
            date: s.date.to_string(),
            ttfa_bin: s.time_to_fall_asleep_bin,
            wake_type: s.wake_type.as_str().to_string(),
            nap_count: s.nap_count,
            nap_min: s.nap_duration_min,
            shift: s.work_shift.as_str().to_string(),
            work_hr: s.work_duration_hr,
            overwork_min: s.overwork_min,
            caffeine: s.caffeine_cups,
            alc_drug: u8::from(s.alcohol_or_drug),
        }
    }
}

/// Reads `hr.csv`, `steps.csv`, `sleep.csv`, `survey.csv` and
/// `participants.csv` from `dir`. Missing stream files are treated as empty.
pub fn read_bundle(dir: &Path) -> Result<CohortData> {
    let roles = read_participants(&dir.join(PARTICIPANTS_FILE))?;
    let mut histories: BTreeMap<String, ParticipantHistory> = BTreeMap::new();

    let hr_path = dir.join(HR_FILE);
    if hr_path.exists() {
        let rows = read_rows::<HrRow>(&hr_path)?;
        for ((pid, date), s) in group_minutes(
            rows.into_iter().map(|r| (r.participant_id, r.date, r.minute, r.bpm)),
            StreamKind::HeartRate,
        )? {
            entry(&mut histories, &pid).heart_rate.insert(date, s);
        }
    }
    let steps_path = dir.join(STEPS_FILE);
    if steps_path.exists() {
        let rows = read_rows::<StepsRow>(&steps_path)?;
        for ((pid, date), s) in group_minutes(
            rows.into_iter().map(|r| (r.participant_id, r.date, r.minute, r.steps)),
            StreamKind::Steps,
        )? {
            entry(&mut histories, &pid).steps.insert(date, s);
        }
    }
    let sleep_path = dir.join(SLEEP_FILE);
    if sleep_path.exists() {
        let mut grouped: BTreeMap<(String, NaiveDate), Vec<SleepEpisode>> = BTreeMap::new();
        for r in read_rows::<SleepRow>(&sleep_path)? {
            let date = parse_date(&r.date)?;
            let ep = SleepEpisode::new(r.start_min, r.end_min, r.duration_min, r.efficiency)
                .map_err(|e| Error::Data(format!("{} {date}: {e}", r.participant_id)))?;
            grouped.entry((r.participant_id, date)).or_default().push(ep);
        }
        for ((pid, date), eps) in grouped {
            let rec = SleepRecord::new(pid.clone(), date, eps)
                .map_err(|e| Error::Data(format!("{pid} {date}: {e}")))?;
            entry(&mut histories, &pid).sleep.insert(date, rec);
        }
    }
    for r in read_rows::<SurveyRow>(&dir.join(SURVEY_FILE))? {
        let s = r.into_survey()?;
        let pid = s.participant_id.clone();
        entry(&mut histories, &pid).surveys.insert(s.date, s);
    }
    Ok(CohortData { roles, histories })
}

fn entry<'a>(h: &'a mut BTreeMap<String, ParticipantHistory>, pid: &str) -> &'a mut ParticipantHistory {
    h.entry(pid.to_string())
        .or_insert_with(|| ParticipantHistory::new(pid))
}

/// Header of `features.csv` for a schema.
pub fn features_header(schema: &FeatureSchema) -> Vec<String> {
    let mut h = vec!["participant_id".to_string(), "date".into(), "role".into()];
    h.extend(schema.names.iter().cloned());
    h.extend(schema.names.iter().map(|n| format!("{n}_missing")));
    h
}

pub fn write_features_csv<W: std::io::Write>(
    out: W,
    schema: &FeatureSchema,
    rows: &[DailyFeatureVector],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(features_header(schema))?;
    for r in rows {
        let mut rec = vec![r.participant_id.clone(), r.date.to_string(), r.role.to_string()];
        rec.extend(
            r.values
                .iter()
                .zip(&r.missing)
                .map(|(v, m)| if *m { String::new() } else { fmt_num(*v) }),
        );
        rec.extend(r.missing.iter().map(|m| if *m { "1" } else { "0" }.to_string()));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `features.csv`, checking the header against `schema` column by column.
pub fn read_features_csv(path: &Path, schema: &FeatureSchema) -> Result<Vec<DailyFeatureVector>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let expected = features_header(schema);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if header != expected {
        let pos = header
            .iter()
            .zip(&expected)
            .position(|(a, b)| a != b)
            .unwrap_or(header.len().min(expected.len()));
        let detail = match (header.get(pos), expected.get(pos)) {
            (Some(got), Some(want)) => format!("column {pos} is `{got}`, expected `{want}`"),
            (None, Some(want)) => format!("missing column `{want}`"),
            (Some(got), None) => format!("unexpected column `{got}`"),
            (None, None) => "header mismatch".into(),
        };
        return Err(Error::Data(format!(
            "{}: expected {} columns, got {}; {detail}",
            path.display(),
            expected.len(),
            header.len()
        )));
    }
    let n = schema.len();
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != expected.len() {
            return Err(Error::Data(format!(
                "{} row {}: expected {} fields, got {}",
                path.display(),
                line + 2,
                expected.len(),
                rec.len()
            )));
        }
        let mut values = Vec::with_capacity(n);
        let mut missing = Vec::with_capacity(n);
        for j in 0..n {
            let flag = rec[3 + n + j].trim();
            let is_missing = match flag {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::Data(format!(
                        "row {}: column `{}` must be 0 or 1, got `{other}`",
                        line + 2,
                        expected[3 + n + j]
                    )))
                }
            };
            let raw = rec[3 + j].trim();
            let v = if is_missing {
                f64::NAN
            } else {
                raw.parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "row {}: column `{}` is not a number: `{raw}`",
                        line + 2,
                        schema.names[j]
                    ))
                })?
            };
            values.push(v);
            missing.push(is_missing);
        }
        out.push(DailyFeatureVector {
            participant_id: rec[0].to_string(),
            date: parse_date(&rec[1])?,
            role: rec[2].parse()?,
            values,
            missing,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_round_trip_bit_exact() {
        let schema = FeatureSchema::subset(&["hr_mean", "overwork", "sleep_regularity"]).unwrap();
        let rows = vec![DailyFeatureVector {
            participant_id: "n01".into(),
            date: parse_date("2020-01-02").unwrap(),
            role: Role::Nurse,
            values: vec![78.123_456_789_012_35, 0.1 + 0.2, f64::NAN],
            missing: vec![false, false, true],
        }];
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &schema, &rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, &buf).unwrap();
        let back = read_features_csv(&p, &schema).unwrap();
        assert_eq!(back[0].values[0].to_bits(), rows[0].values[0].to_bits());
        assert_eq!(back[0].values[1].to_bits(), rows[0].values[1].to_bits());
        assert!(back[0].missing[2]);
    }

    #[test]
    fn wrong_column_count_names_the_column() {
        let schema = FeatureSchema::subset(&["hr_mean", "overwork"]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(
            &p,
            "participant_id,date,role,hr_mean,hr_mean_missing,overwork_missing\nn,2020-01-01,nurse,1,0,0\n",
        )
        .unwrap();
        let err = read_features_csv(&p, &schema).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Data(_)));
        assert!(msg.contains("`overwork`"), "{msg}");
    }
}
