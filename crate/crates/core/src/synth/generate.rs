use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson, StandardNormal};
use statrs::distribution::{Beta, ContinuousCDF, Normal as StatNormal};

use super::spec::{CohortSpec, RoleSpec};
use crate::domain::{Label, Role, WellbeingLabels};
use crate::error::{Error, Result};
use crate::features::io::{
    HrRow, ParticipantRow, SleepRow, StepsRow, SurveyRow, HR_FILE, PARTICIPANTS_FILE, SLEEP_FILE,
    STEPS_FILE, SURVEY_FILE,
};
use crate::features::sleep::MINUTES_PER_DAY;
use crate::features::{
    build_daily_vector, CohortData, DailyFeatureVector, FeatureSchema, MinuteStream,
    ParticipantHistory, SleepEpisode, SleepRecord, StreamKind, SurveyDay, WakeType, WorkShift,
};
use crate::labels::{write_labels_csv, LabelRecord, LABELS_FILE};
use crate::stats::descriptive::{mean, sample_sd};
use crate::util::{fmt_num, parse_date, sub_seed, write_atomic};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

const DAY: i64 = MINUTES_PER_DAY as i64;

/// The coefficients and standardization that turn features into labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    /// Per-role coefficients on pooled z-scored features.
    pub coefficients: BTreeMap<Role, BTreeMap<String, f64>>,
    pub feature_means: BTreeMap<String, f64>,
    pub feature_sds: BTreeMap<String, f64>,
    /// Mean and SD of the raw linear signal within each role.
    pub signal_moments: BTreeMap<Role, (f64, f64)>,
    pub loadings: [f64; Label::COUNT],
    pub signal_share: f64,
    pub participant_sd: f64,
    pub participant_offsets: BTreeMap<String, f64>,
}

impl PlantedModel {
    /// Planted features ordered by the largest absolute coefficient across roles.
    pub fn ranked_features(&self) -> Vec<(String, f64)> {
        let mut best: BTreeMap<&str, f64> = BTreeMap::new();
        for coefs in self.coefficients.values() {
            for (k, v) in coefs {
                let e = best.entry(k.as_str()).or_insert(0.0);
                *e = e.max(v.abs());
            }
        }
        let mut out: Vec<(String, f64)> = best.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "role", "name", "value"])?;
        let mut put = |kind: &str, role: &str, name: &str, v: f64| w.write_record([kind, role, name, &fmt_num(v)]);
        for (role, coefs) in &self.coefficients {
            for (k, v) in coefs {
                put("coefficient", role.as_str(), k, *v)?;
            }
        }
        for (k, v) in &self.feature_means {
            put("feature_mean", "", k, *v)?;
        }
        for (k, v) in &self.feature_sds {
            put("feature_sd", "", k, *v)?;
        }
        for (role, (m, s)) in &self.signal_moments {
            put("signal_mean", role.as_str(), "", *m)?;
            put("signal_sd", role.as_str(), "", *s)?;
        }
        for (l, v) in Label::ALL.iter().zip(self.loadings) {
            put("loading", "", l.as_str(), v)?;
        }
        put("signal_share", "", "", self.signal_share)?;
        put("participant_sd", "", "", self.participant_sd)?;
        for (p, v) in &self.participant_offsets {
            put("participant_offset", "", p, *v)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// A generated cohort: raw streams and surveys, next-day labels and the
/// model that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortBundle {
    pub data: CohortData,
    pub labels: Vec<LabelRecord>,
    pub planted: PlantedModel,
}

impl CohortBundle {
    /// Feature rows of every surveyed day.
    pub fn feature_rows(&self, schema: &FeatureSchema) -> Result<Vec<DailyFeatureVector>> {
        self.data.all_daily_vectors(schema)
    }

    /// Writes the raw CSV bundle plus labels and ground truth into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(name);
            write_atomic(&p, &bytes)?;
            written.push(p);
            Ok(())
        };

        let mut w = csv::Writer::from_writer(Vec::new());
        for (pid, role) in &self.data.roles {
            w.serialize(ParticipantRow {
                participant_id: pid.clone(),
                role: role.to_string(),
            })?;
        }
        emit(PARTICIPANTS_FILE, into_bytes(w)?)?;

        let mut hr = csv::Writer::from_writer(Vec::new());
        let mut steps = csv::Writer::from_writer(Vec::new());
        let mut sleep = csv::Writer::from_writer(Vec::new());
        let mut survey = csv::Writer::from_writer(Vec::new());
        for (pid, h) in &self.data.histories {
            for (date, s) in &h.heart_rate {
                for &(minute, bpm) in &s.samples {
                    hr.serialize(HrRow { participant_id: pid.clone(), date: date.to_string(), minute, bpm })?;
                }
            }
            for (date, s) in &h.steps {
                for &(minute, v) in &s.samples {
                    steps.serialize(StepsRow { participant_id: pid.clone(), date: date.to_string(), minute, steps: v })?;
                }
            }
            for (date, rec) in &h.sleep {
                for e in &rec.episodes {
                    sleep.serialize(SleepRow {
                        participant_id: pid.clone(),
                        date: date.to_string(),
                        start_min: e.start_min,
                        end_min: e.end_min,
                        duration_min: e.duration_min,
                        efficiency: e.efficiency,
                    })?;
                }
            }
            for s in h.surveys.values() {
                survey.serialize(SurveyRow::from_survey(s))?;
            }
        }
        emit(HR_FILE, into_bytes(hr)?)?;
        emit(STEPS_FILE, into_bytes(steps)?)?;
        emit(SLEEP_FILE, into_bytes(sleep)?)?;
        emit(SURVEY_FILE, into_bytes(survey)?)?;

        let mut buf = Vec::new();
        write_labels_csv(&mut buf, &self.labels)?;
        emit(LABELS_FILE, buf)?;
        emit(GROUND_TRUTH_FILE, self.planted.to_csv()?)?;
        Ok(written)
    }
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn participant_ids(spec: &CohortSpec, role: Role) -> Vec<String> {
    let prefix = match role {
        Role::Nurse => "N",
        Role::Doctor => "D",
    };
    (1..=spec.role(role).participants()).map(|i| format!("{prefix}{i:02}")).collect()
}

/// One participant's simulated days before heart rate is rendered.
struct Draft {
    id: String,
    role: Role,
    /// Labelled days; surveyed days are these plus one.
    label_days: usize,
    shifts: Vec<WorkShift>,
    overwork: Vec<f64>,
    /// Absolute `[start, end)` sleep minutes counted from the first day.
    sleep: Vec<Option<(i64, i64, f64, f64)>>,
    surveys: Vec<Option<SurveyDay>>,
    steps: Vec<Vec<(u16, f64)>>,
    worn: Vec<Vec<bool>>,
    hr_z: Vec<f64>,
}

/// Simulates a cohort. The result is a pure function of `(spec, seed)`.
pub fn generate(spec: &CohortSpec, seed: u64) -> Result<CohortBundle> {
    spec.validate()?;
    let start = parse_date(&spec.start_date)?;

    let mut drafts = Vec::new();
    for role in Role::ALL {
        let rs = spec.role(role);
        for (id, &days) in participant_ids(spec, role).into_iter().zip(&rs.days) {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("participant/{id}")));
            drafts.push(draft_participant(&mut rng, id, role, rs, spec.warmup_days, days, start)?);
        }
    }

    // Day-level heart rate: standardize over each role's surveyed days so the
    // role moments land on target.
    let mut hr_means: Vec<Vec<f64>> = drafts.iter().map(|d| vec![0.0; d.hr_z.len()]).collect();
    for role in Role::ALL {
        let rs = spec.role(role);
        let pooled: Vec<f64> = drafts
            .iter()
            .filter(|d| d.role == role)
            .flat_map(|d| d.hr_z[spec.warmup_days..].iter().copied())
            .collect();
        let m = mean(&pooled).unwrap_or(0.0);
        let s = sample_sd(&pooled).filter(|s| *s > 0.0).unwrap_or(1.0);
        for (d, out) in drafts.iter().zip(hr_means.iter_mut()) {
            if d.role == role {
                for (k, z) in d.hr_z.iter().enumerate() {
                    let z = if k >= spec.warmup_days { (z - m) / s } else { *z };
                    out[k] = rs.hr_mean + rs.hr_sd * z;
                }
            }
        }
    }

    let mut data = CohortData::default();
    for (d, means) in drafts.iter().zip(&hr_means) {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("heart-rate/{}", d.id)));
        data.roles.insert(d.id.clone(), d.role);
        data.histories.insert(d.id.clone(), render_history(&mut rng, d, means, start)?);
    }

    let (labels, planted) = plant_labels(spec, seed, &data, &drafts, start)?;
    Ok(CohortBundle { data, labels, planted })
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gamma_mean_sd(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let shape = (mean / sd).powi(2);
    Gamma::new(shape, sd * sd / mean).expect("positive gamma parameters").sample(rng)
}

fn categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    WeightedIndex::new(weights).expect("validated mix").sample(rng)
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let v: f64 = Poisson::new(lambda).expect("positive rate").sample(rng);
    v as u32
}

/// A roster matching the shift mix: exact counts by largest remainder, laid
/// out as shuffled runs of one to three consecutive days.
fn roster(rng: &mut ChaCha8Rng, mix: &[f64; 3], days: usize) -> Vec<WorkShift> {
    let total: f64 = mix.iter().sum();
    let quotas: Vec<f64> = mix.iter().map(|p| p / total * days as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())));
    let short = days - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    let mut runs = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut left = c;
        while left > 0 {
            let len = rng.random_range(1..=3).min(left);
            runs.push((WorkShift::WORKED[i], len));
            left -= len;
        }
    }
    runs.shuffle(rng);
    runs.into_iter().flat_map(|(s, n)| std::iter::repeat_n(s, n)).collect()
}

fn work_span(shift: WorkShift, day: i64, overwork: f64) -> Option<(i64, i64)> {
    let (s, e) = match shift {
        WorkShift::Shift1 => (510, 990),
        WorkShift::Shift2 => (990, 1470),
        WorkShift::Shift3 => (30, 510),
        WorkShift::None => return None,
    };
    Some((day * DAY + s, day * DAY + e + overwork.round() as i64))
}

fn draft_participant(
    rng: &mut ChaCha8Rng,
    id: String,
    role: Role,
    rs: &RoleSpec,
    warmup: usize,
    label_days: usize,
    start: NaiveDate,
) -> Result<Draft> {
    let n_days = warmup + label_days + 1;
    let mut shifts = roster(rng, &rs.shift_mix, warmup);
    shifts.extend(roster(rng, &rs.shift_mix, n_days - warmup));
    let (ow_p, ow_scale) = rs.overwork_params()?;
    let eff_gap = (100.0 - rs.sleep_efficiency_mean, rs.sleep_efficiency_sd);

    let mut surveys = Vec::with_capacity(n_days);
    let mut overwork = Vec::with_capacity(n_days);
    for (k, &shift) in shifts.iter().enumerate() {
        let ow = if ow_p > 0.0 && rng.random_bool(ow_p.min(1.0)) {
            (-ow_scale * (1.0 - rng.random::<f64>()).ln()).round()
        } else {
            0.0
        };
        overwork.push(ow);
        if k < warmup {
            surveys.push(None);
            continue;
        }
        let naps = poisson(rng, rs.nap_count_mean);
        let per_nap = if rs.nap_count_mean > 0.0 { rs.nap_duration_mean / rs.nap_count_mean } else { 0.0 };
        let nap_min: f64 = (0..naps).map(|_| gamma_mean_sd(rng, per_nap.max(1.0), per_nap.max(1.0) / 1.5)).sum();
        let work_hr = if rs.work_hours_sd > 0.0 {
            ((rs.work_hours_mean + rs.work_hours_sd * normal(rng)).max(1.0) * 10.0).round() / 10.0
        } else {
            rs.work_hours_mean
        };
        let survey = SurveyDay {
            participant_id: id.clone(),
            date: start + Duration::days(k as i64),
            time_to_fall_asleep_bin: categorical(rng, &rs.ttfa_mix) as u8,
            wake_type: WakeType::ALL[categorical(rng, &rs.wake_mix)],
            nap_count: naps,
            nap_duration_min: nap_min.round(),
            work_shift: shift,
            work_duration_hr: work_hr,
            overwork_min: ow,
            caffeine_cups: poisson(rng, rs.caffeine_mean),
            alcohol_or_drug: rng.random_bool(rs.alcohol_rate),
        };
        survey.validate()?;
        surveys.push(Some(survey));
    }

    // Main sleep ending on each day, placed by that day's shift.
    let mut sleep = Vec::with_capacity(n_days);
    let mut last_end = i64::MIN;
    for (k, &shift) in shifts.iter().enumerate() {
        let day = k as i64;
        if rng.random_bool(0.03) {
            sleep.push(None);
            continue;
        }
        let nominal = match shift {
            WorkShift::Shift1 | WorkShift::None => -45,
            WorkShift::Shift2 => 150,
            WorkShift::Shift3 => 570,
        };
        let mut start_abs = day * DAY + nominal + (35.0 * normal(rng)).round() as i64;
        if last_end != i64::MIN {
            start_abs = start_abs.max(last_end + 60);
        }
        let asleep = loop {
            let d = rs.sleep_duration_mean + rs.sleep_duration_sd * normal(rng);
            if (90.0..=600.0).contains(&d) {
                break d.round();
            }
        };
        let eff = (100.0 - gamma_mean_sd(rng, eff_gap.0.max(0.1), eff_gap.1)).clamp(60.0, 100.0);
        let eff = (eff * 10.0).round() / 10.0;
        let in_bed = (asleep * 100.0 / eff).round() as i64;
        let end_abs = (start_abs + in_bed).min((day + 1) * DAY - 1);
        if end_abs <= start_abs.max(day * DAY) {
            sleep.push(None);
            continue;
        }
        let asleep = asleep.min(((end_abs - start_abs) as f64 * eff / 100.0).round());
        last_end = end_abs;
        sleep.push(Some((start_abs, end_abs, asleep, eff)));
    }

    let asleep_at = |t: i64| sleep.iter().flatten().any(|&(s, e, _, _)| s <= t && t < e);

    let mut steps = Vec::with_capacity(n_days);
    let mut worn = Vec::with_capacity(n_days);
    let mut hr_z = Vec::with_capacity(n_days);
    let offset = normal(rng);
    let within = (1.0 - 0.2f64.powi(2)).sqrt();
    for (k, &shift) in shifts.iter().enumerate() {
        let day = k as i64;
        hr_z.push(0.2 * offset + within * normal(rng));
        let mut present = vec![true; MINUTES_PER_DAY];
        if rng.random_bool(0.3) {
            let len = rng.random_range(15..=120);
            let from = rng.random_range(0..MINUTES_PER_DAY - len);
            present[from..from + len].iter_mut().for_each(|p| *p = false);
        }
        let work = work_span(shift, day, overwork[k]);
        let awake: Vec<bool> = (0..MINUTES_PER_DAY)
            .map(|m| present[m] && !asleep_at(day * DAY + m as i64))
            .collect();

        let target = gamma_mean_sd(rng, rs.steps_mean, rs.steps_sd);
        let active_mean = (4.0f64.ln() + 0.35 * normal(rng)).exp();
        let still_mean = rs.stationary_run_mean * (0.3 * normal(rng)).exp();
        let mut active = vec![false; MINUTES_PER_DAY];
        let mut m = 0;
        let mut is_active = rng.random_bool(0.5);
        while m < MINUTES_PER_DAY {
            if !awake[m] {
                m += 1;
                continue;
            }
            let mean_len = if is_active { active_mean } else { still_mean };
            let len = 1 + (-(mean_len - 1.0).max(0.01) * (1.0 - rng.random::<f64>()).ln()) as usize;
            let mut taken = 0;
            while taken < len && m < MINUTES_PER_DAY && awake[m] {
                active[m] = is_active;
                m += 1;
                taken += 1;
            }
            is_active = !is_active;
        }
        let weights: Vec<f64> = (0..MINUTES_PER_DAY)
            .map(|m| {
                if !active[m] {
                    return 0.0;
                }
                let t = day * DAY + m as i64;
                let boost = if work.is_some_and(|(s, e)| s <= t && t < e) { 1.3 } else { 1.0 };
                boost * gamma_mean_sd(rng, 1.0, 0.7)
            })
            .collect();
        let total_w: f64 = weights.iter().sum();
        let samples: Vec<(u16, f64)> = (0..MINUTES_PER_DAY)
            .filter(|&m| present[m])
            .map(|m| {
                let v = if active[m] && total_w > 0.0 {
                    (target * weights[m] / total_w).round().clamp(1.0, 220.0)
                } else {
                    0.0
                };
                (m as u16, v)
            })
            .collect();
        steps.push(samples);
        worn.push(present);
    }

    Ok(Draft {
        id,
        role,
        label_days,
        shifts,
        overwork,
        sleep,
        surveys,
        steps,
        worn,
        hr_z,
    })
}

/// Minute heart rate around the day mean: circadian swing, lower in sleep,
/// higher at work and with steps, AR(1) noise; recentred so the day mean is
/// exact before rounding.
fn render_history(rng: &mut ChaCha8Rng, d: &Draft, day_means: &[f64], start: NaiveDate) -> Result<ParticipantHistory> {
    let mut h = ParticipantHistory::new(d.id.clone());
    let noise = Normal::new(0.0, 3.0).expect("valid normal");
    for (k, &mu) in day_means.iter().enumerate() {
        let day = k as i64;
        let date = start + Duration::days(day);
        let work = work_span(d.shifts[k], day, d.overwork[k]);
        let steps_at: BTreeMap<u16, f64> = d.steps[k].iter().copied().collect();
        let mut ar = 0.0;
        let mut raw = Vec::new();
        for m in 0..MINUTES_PER_DAY {
            ar = 0.85 * ar + noise.sample(rng);
            if !d.worn[k][m] {
                continue;
            }
            let t = day * DAY + m as i64;
            let mut v = 5.0 * (2.0 * std::f64::consts::PI * (m as f64 - 900.0) / MINUTES_PER_DAY as f64).cos() + ar;
            if d.sleep.iter().flatten().any(|&(s, e, _, _)| s <= t && t < e) {
                v -= 8.0;
            }
            if work.is_some_and(|(s, e)| s <= t && t < e) {
                v += 4.0;
            }
            v += (0.15 * steps_at.get(&(m as u16)).copied().unwrap_or(0.0)).min(25.0);
            raw.push((m as u16, v));
        }
        if !raw.is_empty() {
            let centre = raw.iter().map(|r| r.1).sum::<f64>() / raw.len() as f64;
            let samples = raw
                .into_iter()
                .map(|(m, v)| (m, (v - centre + mu).round().clamp(40.0, 190.0)))
                .collect();
            h.heart_rate.insert(date, MinuteStream::new(d.id.clone(), date, StreamKind::HeartRate, samples)?);
        }
        h.steps.insert(date, MinuteStream::new(d.id.clone(), date, StreamKind::Steps, d.steps[k].clone())?);
        if let Some((s, e, asleep, eff)) = d.sleep[k] {
            let ep = SleepEpisode::new(s.rem_euclid(DAY) as u16, e.rem_euclid(DAY) as u16, asleep, eff)?;
            h.sleep.insert(date, SleepRecord::new(d.id.clone(), date, vec![ep])?);
        }
        if let Some(s) = &d.surveys[k] {
            h.surveys.insert(date, s.clone());
        }
    }
    Ok(h)
}

fn plant_labels(
    spec: &CohortSpec,
    seed: u64,
    data: &CohortData,
    drafts: &[Draft],
    start: NaiveDate,
) -> Result<(Vec<LabelRecord>, PlantedModel)> {
    let schema = FeatureSchema::default();
    let mut rows: Vec<DailyFeatureVector> = Vec::new();
    for d in drafts {
        let h = &data.histories[&d.id];
        for k in spec.warmup_days..spec.warmup_days + d.label_days {
            rows.push(build_daily_vector(h, d.role, start + Duration::days(k as i64), &schema)?);
        }
    }

    let names: Vec<String> = {
        let mut set: Vec<String> = Role::ALL
            .iter()
            .flat_map(|r| spec.role(*r).planted.keys().cloned())
            .collect();
        set.sort();
        set.dedup();
        set
    };
    let mut feature_means = BTreeMap::new();
    let mut feature_sds = BTreeMap::new();
    for n in &names {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.get(&schema, n)).collect();
        feature_means.insert(n.clone(), mean(&vals).unwrap_or(0.0));
        feature_sds.insert(n.clone(), sample_sd(&vals).unwrap_or(0.0));
    }
    let z = |r: &DailyFeatureVector, n: &str| -> f64 {
        match (r.get(&schema, n), feature_sds[n]) {
            (Some(x), sd) if sd > 0.0 => (x - feature_means[n]) / sd,
            _ => 0.0,
        }
    };
    let raw_signal: Vec<f64> = rows
        .iter()
        .map(|r| spec.role(r.role).planted.iter().map(|(n, b)| b * z(r, n)).sum())
        .collect();

    let mut signal_moments = BTreeMap::new();
    let mut signal = vec![0.0; rows.len()];
    for role in Role::ALL {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].role == role).collect();
        let vals: Vec<f64> = idx.iter().map(|&i| raw_signal[i]).collect();
        let m = mean(&vals).unwrap_or(0.0);
        let s = sample_sd(&vals).unwrap_or(0.0);
        signal_moments.insert(role, (m, s));
        for &i in &idx {
            signal[i] = if s > 0.0 { (raw_signal[i] - m) / s } else { 0.0 };
        }
    }

    let ls = &spec.labels;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "labels"));
    let participant_offsets: BTreeMap<String, f64> =
        drafts.iter().map(|d| (d.id.clone(), normal(&mut rng))).collect();
    let resid = (1.0 - ls.signal_share - ls.participant_sd.powi(2)).max(0.0).sqrt();
    let mut latent = vec![[0.0; Label::COUNT]; rows.len()];
    for (i, r) in rows.iter().enumerate() {
        let f = ls.signal_share.sqrt() * signal[i]
            + ls.participant_sd * participant_offsets[&r.participant_id]
            + resid * normal(&mut rng);
        for (j, lam) in ls.loadings.iter().enumerate() {
            latent[i][j] = lam * f + (1.0 - lam * lam).max(0.0).sqrt() * normal(&mut rng);
        }
    }

    // Within each role, map standardized latents onto the Beta marginals.
    let std_normal = StatNormal::standard();
    let mut values = vec![[0.0; Label::COUNT]; rows.len()];
    for role in Role::ALL {
        let rs = spec.role(role);
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].role == role).collect();
        for label in Label::ALL {
            let j = label.index();
            let (a, b) = rs.label_beta(label)?;
            let beta = Beta::new(a, b).map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
            let vals: Vec<f64> = idx.iter().map(|&i| latent[i][j]).collect();
            let m = mean(&vals).unwrap_or(0.0);
            let s = sample_sd(&vals).filter(|s| *s > 0.0).unwrap_or(1.0);
            for &i in &idx {
                let u = std_normal.cdf((latent[i][j] - m) / s).clamp(1e-9, 1.0 - 1e-9);
                values[i][j] = (100.0 * beta.inverse_cdf(u)).round().clamp(0.0, 100.0);
            }
        }
    }

    let labels = rows
        .iter()
        .zip(values)
        .map(|(r, v)| LabelRecord {
            participant_id: r.participant_id.clone(),
            date: r.date + Duration::days(1),
            labels: WellbeingLabels(v),
        })
        .collect();
    let planted = PlantedModel {
        coefficients: Role::ALL.iter().map(|r| (*r, spec.role(*r).planted.clone())).collect(),
        feature_means,
        feature_sds,
        signal_moments,
        loadings: ls.loadings,
        signal_share: ls.signal_share,
        participant_sd: ls.participant_sd,
        participant_offsets,
    };
    Ok((labels, planted))
}
