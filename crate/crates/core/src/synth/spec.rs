use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Label, Role};
use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;

/// Per-role generation targets. Means and SDs are day-level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleSpec {
    /// Labelled days for each participant of this role.
    pub days: Vec<usize>,
    pub hr_mean: f64,
    pub hr_sd: f64,
    pub sleep_duration_mean: f64,
    pub sleep_duration_sd: f64,
    pub sleep_efficiency_mean: f64,
    pub sleep_efficiency_sd: f64,
    pub steps_mean: f64,
    pub steps_sd: f64,
    /// Overwork is zero-inflated exponential with this mean and SD.
    pub overwork_mean: f64,
    pub overwork_sd: f64,
    pub work_hours_mean: f64,
    pub work_hours_sd: f64,
    pub nap_count_mean: f64,
    pub nap_duration_mean: f64,
    pub caffeine_mean: f64,
    pub alcohol_rate: f64,
    /// Shares of shifts 1, 2, 3.
    pub shift_mix: [f64; 3],
    /// Shares of natural, alarm, other.
    pub wake_mix: [f64; 3],
    /// Shares of the six time-to-fall-asleep bins.
    pub ttfa_mix: [f64; 6],
    /// Mean stationary-run length in minutes; longer runs spread the
    /// stationary segment histogram.
    pub stationary_run_mean: f64,
    pub label_mean: [f64; Label::COUNT],
    pub label_sd: [f64; Label::COUNT],
    /// Coefficients on pooled z-scored features driving the latent factor.
    pub planted: BTreeMap<String, f64>,
}

impl RoleSpec {
    pub fn nurse() -> Self {
        Self {
            days: vec![16, 16, 16, 16, 16, 16, 17, 17, 17, 17],
            hr_mean: 78.5,
            hr_sd: 7.1,
            sleep_duration_mean: 374.3,
            sleep_duration_sd: 134.0,
            sleep_efficiency_mean: 93.1,
            sleep_efficiency_sd: 4.9,
            steps_mean: 8931.0,
            steps_sd: 4030.0,
            overwork_mean: 11.0,
            overwork_sd: 41.8,
            work_hours_mean: 8.0,
            work_hours_sd: 0.0,
            nap_count_mean: 0.55,
            nap_duration_mean: 31.1,
            caffeine_mean: 0.47,
            alcohol_rate: 0.06,
            shift_mix: [0.538, 0.304, 0.157],
            wake_mix: [0.355, 0.609, 0.036],
            ttfa_mix: [0.340, 0.314, 0.173, 0.066, 0.036, 0.071],
            stationary_run_mean: 10.0,
            label_mean: [38.5, 57.2, 54.0, 63.3, 63.5],
            label_sd: [22.9, 20.9, 22.9, 22.1, 23.4],
            planted: planted(&[
                ("sleep_regularity", 0.60),
                ("sleep_efficiency", 0.55),
                ("shift1", 0.55),
                ("steps_total", -0.30),
                ("entropy_active", -0.30),
            ]),
        }
    }

    pub fn doctor() -> Self {
        Self {
            days: vec![19, 19, 19, 20],
            hr_mean: 70.6,
            hr_sd: 6.8,
            sleep_duration_mean: 363.1,
            sleep_duration_sd: 106.3,
            sleep_efficiency_mean: 95.5,
            sleep_efficiency_sd: 2.9,
            steps_mean: 8140.0,
            steps_sd: 3351.0,
            overwork_mean: 202.6,
            overwork_sd: 320.1,
            work_hours_mean: 8.4,
            work_hours_sd: 1.7,
            nap_count_mean: 0.37,
            nap_duration_mean: 19.1,
            caffeine_mean: 0.45,
            alcohol_rate: 0.04,
            shift_mix: [0.643, 0.198, 0.158],
            wake_mix: [0.356, 0.465, 0.178],
            ttfa_mix: [0.406, 0.416, 0.119, 0.030, 0.030, 0.0],
            stationary_run_mean: 20.0,
            label_mean: [52.8, 59.2, 60.5, 63.9, 65.6],
            label_sd: [23.5, 17.1, 22.4, 22.4, 17.5],
            planted: planted(&[
                ("sleep_regularity", 0.55),
                ("sleep_efficiency", 0.50),
                ("shift1", 0.50),
                ("steps_total", -0.20),
                ("entropy_active", -0.20),
                ("overwork", -0.45),
            ]),
        }
    }

    pub fn participants(&self) -> usize {
        self.days.len()
    }

    /// Zero-inflation probability and exponential mean of overwork.
    pub fn overwork_params(&self) -> Result<(f64, f64)> {
        if self.overwork_mean <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let second = self.overwork_sd.powi(2) + self.overwork_mean.powi(2);
        let scale = second / (2.0 * self.overwork_mean);
        let p = self.overwork_mean / scale;
        if p > 1.0 {
            return Err(Error::InfeasibleSpec(format!(
                "overwork mean {} and SD {} cannot come from a zero-inflated exponential",
                self.overwork_mean, self.overwork_sd
            )));
        }
        Ok((p, scale))
    }

    /// Beta shape parameters of each label's 0-100 marginal.
    pub fn label_beta(&self, label: Label) -> Result<(f64, f64)> {
        let m = self.label_mean[label.index()] / 100.0;
        let v = (self.label_sd[label.index()] / 100.0).powi(2);
        if !(m > 0.0 && m < 1.0 && v > 0.0 && v < m * (1.0 - m)) {
            return Err(Error::InfeasibleSpec(format!(
                "{label}: mean {} and SD {} do not fit on 0-100",
                self.label_mean[label.index()],
                self.label_sd[label.index()]
            )));
        }
        let k = m * (1.0 - m) / v - 1.0;
        Ok((m * k, (1.0 - m) * k))
    }

    fn validate(&self, role: Role) -> Result<()> {
        let bad = |what: &str| Err(Error::InfeasibleSpec(format!("{role}: {what}")));
        if self.days.is_empty() || self.days.iter().any(|d| *d < 2) {
            return bad("every participant needs at least 2 labelled days");
        }
        for (name, sd) in [
            ("hr_sd", self.hr_sd),
            ("sleep_duration_sd", self.sleep_duration_sd),
            ("sleep_efficiency_sd", self.sleep_efficiency_sd),
            ("steps_sd", self.steps_sd),
        ] {
            if !(sd > 0.0 && sd.is_finite()) {
                return bad(&format!("{name} must be > 0"));
            }
        }
        if self.work_hours_sd < 0.0 || self.overwork_sd < 0.0 {
            return bad("SDs must be >= 0");
        }
        if !(self.sleep_efficiency_mean > 0.0 && self.sleep_efficiency_mean < 100.0) {
            return bad("sleep_efficiency_mean must lie in (0, 100)");
        }
        for (name, mix) in [
            ("shift_mix", &self.shift_mix[..]),
            ("wake_mix", &self.wake_mix[..]),
            ("ttfa_mix", &self.ttfa_mix[..]),
        ] {
            let sum: f64 = mix.iter().sum();
            if mix.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 0.01 {
                return bad(&format!("{name} must be non-negative and sum to 1, sums to {sum}"));
            }
        }
        if !(0.0..=1.0).contains(&self.alcohol_rate) {
            return bad("alcohol_rate must be a probability");
        }
        if self.stationary_run_mean < 1.0 {
            return bad("stationary_run_mean must be >= 1");
        }
        self.overwork_params()?;
        for l in Label::ALL {
            self.label_beta(l)?;
        }
        for name in self.planted.keys() {
            if !FEATURE_NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!("{role}: unknown planted feature `{name}`")));
            }
        }
        Ok(())
    }
}

fn planted(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Latent-factor structure shared by both roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    /// Loading of each label on the shared wellbeing factor.
    pub loadings: [f64; Label::COUNT],
    /// Share of the factor's variance explained by the planted features.
    pub signal_share: f64,
    /// Participant offset SD as a fraction of the factor SD.
    pub participant_sd: f64,
}

impl Default for LabelSpec {
    fn default() -> Self {
        Self {
            loadings: [0.55, 0.915, 0.87, 0.87, 0.915],
            signal_share: 0.9,
            participant_sd: 0.2,
        }
    }
}

impl LabelSpec {
    /// Correlations between the labels' latent scores.
    pub fn correlation_target(&self) -> [[f64; Label::COUNT]; Label::COUNT] {
        let mut c = [[0.0; Label::COUNT]; Label::COUNT];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 1.0 } else { self.loadings[i] * self.loadings[j] };
            }
        }
        c
    }
}

/// Everything the generator needs besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    /// First calendar day of every participant's record.
    #[serde(default = "default_start")]
    pub start_date: String,
    /// Unlabelled days simulated before the first surveyed day so rolling
    /// windows have history.
    #[serde(default = "default_warmup")]
    pub warmup_days: usize,
    #[serde(default = "RoleSpec::nurse")]
    pub nurse: RoleSpec,
    #[serde(default = "RoleSpec::doctor")]
    pub doctor: RoleSpec,
    #[serde(default)]
    pub labels: LabelSpec,
}

fn default_start() -> String {
    "2020-01-06".into()
}

fn default_warmup() -> usize {
    7
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            start_date: default_start(),
            warmup_days: default_warmup(),
            nurse: RoleSpec::nurse(),
            doctor: RoleSpec::doctor(),
            labels: LabelSpec::default(),
        }
    }
}

impl CohortSpec {
    pub fn role(&self, role: Role) -> &RoleSpec {
        match role {
            Role::Nurse => &self.nurse,
            Role::Doctor => &self.doctor,
        }
    }

    pub fn role_mut(&mut self, role: Role) -> &mut RoleSpec {
        match role {
            Role::Nurse => &mut self.nurse,
            Role::Doctor => &mut self.doctor,
        }
    }

    /// Labels become a deterministic function of the planted features.
    pub fn noiseless(mut self) -> Self {
        self.labels = LabelSpec {
            loadings: [1.0; Label::COUNT],
            signal_share: 1.0,
            participant_sd: 0.0,
        };
        self
    }

    pub fn total_label_days(&self) -> usize {
        self.nurse.days.iter().chain(&self.doctor.days).sum()
    }

    pub fn validate(&self) -> Result<()> {
        crate::util::parse_date(&self.start_date)
            .map_err(|_| Error::Config(format!("start_date `{}` is not YYYY-MM-DD", self.start_date)))?;
        for r in Role::ALL {
            self.role(r).validate(r)?;
        }
        let l = &self.labels;
        if !(0.0..=1.0).contains(&l.signal_share) {
            return Err(Error::InfeasibleSpec("signal_share must lie in [0, 1]".into()));
        }
        if !(l.participant_sd >= 0.0 && l.participant_sd.powi(2) + l.signal_share <= 1.0 + 1e-12) {
            return Err(Error::InfeasibleSpec(
                "signal_share plus participant variance exceeds the factor variance".into(),
            ));
        }
        if !is_psd(&l.correlation_target()) {
            return Err(Error::InfeasibleSpec(format!(
                "label correlation target implied by loadings {:?} is not positive semidefinite",
                l.loadings
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Cholesky with a small negative-pivot allowance.
fn is_psd<const N: usize>(a: &[[f64; N]; N]) -> bool {
    let mut l = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d < -1e-10 {
                    return false;
                }
                l[i][i] = d.max(0.0).sqrt();
            } else if l[j][j] > 1e-12 {
                l[i][j] = (a[i][j] - s) / l[j][j];
            } else if (a[i][j] - s).abs() > 1e-8 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_sized() {
        let s = CohortSpec::default();
        s.validate().unwrap();
        assert_eq!(s.nurse.days.iter().sum::<usize>(), 164);
        assert_eq!(s.doctor.days.iter().sum::<usize>(), 77);
        assert_eq!(s.total_label_days(), 241);
    }

    #[test]
    fn toml_round_trip_and_partial() {
        let s = CohortSpec::default();
        assert_eq!(CohortSpec::from_toml(&s.to_toml().unwrap()).unwrap(), s);
        let partial = CohortSpec::from_toml("warmup_days = 3\n[labels]\nloadings = [0.5, 0.5, 0.5, 0.5, 0.5]\nsignal_share = 0.5\nparticipant_sd = 0.1\n").unwrap();
        assert_eq!(partial.warmup_days, 3);
        assert_eq!(partial.nurse, RoleSpec::nurse());
    }

    #[test]
    fn non_psd_loadings_rejected() {
        let mut s = CohortSpec::default();
        s.labels.loadings[1] = 1.2;
        assert!(matches!(s.validate(), Err(Error::InfeasibleSpec(_))));
    }

    #[test]
    fn psd_check() {
        assert!(is_psd(&[[1.0, 0.9], [0.9, 1.0]]));
        assert!(is_psd(&[[1.0, 1.0], [1.0, 1.0]]));
        assert!(!is_psd(&[[1.0, 1.1], [1.1, 1.0]]));
    }

    #[test]
    fn mixes_must_sum_to_one() {
        let mut s = CohortSpec::default();
        s.doctor.shift_mix = [0.5, 0.2, 0.1];
        assert!(matches!(s.validate(), Err(Error::InfeasibleSpec(_))));
    }

    #[test]
    fn overwork_params_reproduce_moments() {
        let r = RoleSpec::doctor();
        let (p, mu) = r.overwork_params().unwrap();
        assert!((p * mu - 202.6).abs() < 1e-9);
        let var = 2.0 * p * mu * mu - (p * mu).powi(2);
        assert!((var.sqrt() - 320.1).abs() < 1e-9);
    }

    #[test]
    fn beta_params_reproduce_moments() {
        let r = RoleSpec::nurse();
        let (a, b) = r.label_beta(Label::Alertness).unwrap();
        let m = a / (a + b);
        let v = a * b / ((a + b).powi(2) * (a + b + 1.0));
        assert!((m * 100.0 - 38.5).abs() < 1e-9);
        assert!((v.sqrt() * 100.0 - 22.9).abs() < 1e-9);
        let mut bad = r.clone();
        bad.label_sd[0] = 60.0;
        assert!(matches!(bad.label_beta(Label::Alertness), Err(Error::InfeasibleSpec(_))));
    }
}
