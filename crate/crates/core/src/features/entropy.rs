//! Complexity measures: sample entropy of heart rate and information entropy
//! of stationary/active segment durations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::MinuteStream;
use crate::stats::descriptive::sample_sd;

/// Embedding dimension and tolerance multiplier for sample entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEntropyParams {
    pub m: usize,
    pub r_factor: f64,
}

impl Default for SampleEntropyParams {
    fn default() -> Self {
        Self { m: 2, r_factor: 0.2 }
    }
}

impl SampleEntropyParams {
    pub fn new(m: usize, r_factor: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("sample entropy m must be >= 1".into()));
        }
        if !(r_factor > 0.0 && r_factor.is_finite()) {
            return Err(Error::Config("sample entropy r_factor must be > 0".into()));
        }
        Ok(Self { m, r_factor })
    }
}

/// Template-match counts behind a sample entropy value.
///
/// `matches_m` counts template pairs of length `m` within tolerance,
/// `matches_m1` those that still match at length `m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchCounts {
    pub matches_m: u64,
    pub matches_m1: u64,
}

/// Value returned when no length-`m+1` template matches: `ln((N-m)(N-m-1))`,
/// the largest finite value a single match could produce.
pub fn sample_entropy_cap(n: usize, m: usize) -> f64 {
    (((n - m) * (n - m - 1)) as f64).ln()
}

/// Converts match counts into a sample entropy value.
///
/// Ordered and unordered pair counts give the same ratio, so either may be
/// passed as long as both counts use the same convention.
pub fn sample_entropy_from_counts(counts: MatchCounts, n: usize, m: usize) -> f64 {
    if counts.matches_m1 == 0 || counts.matches_m == 0 {
        return sample_entropy_cap(n, m);
    }
    -((counts.matches_m1 as f64) / (counts.matches_m as f64)).ln()
}

/// Counts unordered template pairs `i < j` over the first `N - m` templates
/// whose Chebyshev distance is strictly below `r`, at lengths `m` and `m + 1`.
pub fn count_template_matches(x: &[f64], m: usize, r: f64) -> MatchCounts {
    let n_templates = x.len() - m;
    let mut matches_m = 0u64;
    let mut matches_m1 = 0u64;
    for i in 0..n_templates {
        let head = &x[i..i + m + 1];
        for j in (i + 1)..n_templates {
            let other = &x[j..j + m + 1];
            if head[..m]
                .iter()
                .zip(&other[..m])
                .all(|(a, b)| (a - b).abs() < r)
            {
                matches_m += 1;
                if (head[m] - other[m]).abs() < r {
                    matches_m1 += 1;
                }
            }
        }
    }
    MatchCounts {
        matches_m,
        matches_m1,
    }
}

/// Sample entropy of `x` with tolerance `r = r_factor * sd(x)`.
pub fn sample_entropy(x: &[f64], params: &SampleEntropyParams) -> Result<f64> {
    let m = params.m;
    if x.len() < m + 2 {
        return Err(Error::InsufficientData {
            needed: m + 2,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidStream("non-finite sample".into()));
    }
    let sd = sample_sd(x).ok_or(Error::DegenerateSeries)?;
    if sd == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let r = params.r_factor * sd;
    let counts = count_template_matches(x, m, r);
    Ok(sample_entropy_from_counts(counts, x.len(), m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Stationary,
    Active,
}

/// Counts of segment durations, one bin per distinct duration in minutes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentHistogram {
    pub kind: SegmentKind,
    pub counts: BTreeMap<u32, u64>,
}

impl SegmentHistogram {
    pub fn new(kind: SegmentKind) -> Self {
        Self {
            kind,
            counts: BTreeMap::new(),
        }
    }

    pub fn from_counts(kind: SegmentKind, counts: impl IntoIterator<Item = (u32, u64)>) -> Self {
        let mut h = Self::new(kind);
        for (d, c) in counts {
            if c > 0 {
                *h.counts.entry(d).or_default() += c;
            }
        }
        h
    }

    pub fn record(&mut self, duration: u32) {
        *self.counts.entry(duration).or_default() += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts.values().map(|&c| c as f64 / total).collect()
    }

    /// Segment durations in ascending order, repeated by count.
    pub fn durations(&self) -> Vec<u32> {
        self.counts
            .iter()
            .flat_map(|(&d, &c)| std::iter::repeat_n(d, c as usize))
            .collect()
    }
}

/// Splits the awake minutes of a step stream into maximal zero-step
/// (stationary) and positive-step (active) runs.
///
/// Sleep minutes and minutes absent from the stream are excluded and
/// terminate the current run.
pub fn extract_segments(
    steps: &MinuteStream,
    sleep_mask: &[bool],
) -> (SegmentHistogram, SegmentHistogram) {
    let mut stationary = SegmentHistogram::new(SegmentKind::Stationary);
    let mut active = SegmentHistogram::new(SegmentKind::Active);
    let mut run: Option<(bool, u32)> = None;
    let mut prev_minute: Option<u16> = None;

    let mut flush = |run: &mut Option<(bool, u32)>| {
        if let Some((is_active, len)) = run.take() {
            if is_active {
                active.record(len);
            } else {
                stationary.record(len);
            }
        }
    };

    for &(minute, value) in &steps.samples {
        let asleep = sleep_mask.get(minute as usize).copied().unwrap_or(false);
        let contiguous = prev_minute.is_some_and(|p| p + 1 == minute);
        if !contiguous {
            flush(&mut run);
        }
        prev_minute = Some(minute);
        if asleep {
            flush(&mut run);
            continue;
        }
        let is_active = value > 0.0;
        match run.as_mut() {
            Some((kind, len)) if *kind == is_active => *len += 1,
            _ => {
                flush(&mut run);
                run = Some((is_active, 1));
            }
        }
    }
    flush(&mut run);
    (stationary, active)
}

/// `-sum p ln p` over the non-empty bins of a histogram.
pub fn information_entropy(h: &SegmentHistogram) -> Result<f64> {
    if h.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let en: f64 = h
        .probabilities()
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(en.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{MinuteStream, StreamKind};
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    fn steps(values: &[(u16, f64)]) -> MinuteStream {
        MinuteStream::new(
            "p1",
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            StreamKind::Steps,
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn too_short_series_is_rejected() {
        let err = sample_entropy(&[1.0, 2.0, 3.0], &SampleEntropyParams::default()).unwrap_err();
        assert_eq!(err, Error::InsufficientData { needed: 4, got: 3 });
    }

    #[test]
    fn constant_series_is_degenerate() {
        let x = vec![5.0; 100];
        assert_eq!(
            sample_entropy(&x, &SampleEntropyParams::default()),
            Err(Error::DegenerateSeries)
        );
    }

    #[test]
    fn increasing_series_without_matches_hits_cap() {
        // sd of 1..=10 is 3.03, so r = 0.61 < 1 = smallest pairwise gap.
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let v = sample_entropy(&x, &SampleEntropyParams::default()).unwrap();
        assert_eq!(v, (8.0f64 * 7.0).ln());
    }

    #[test]
    fn segments_follow_run_lengths() {
        let s = steps(&[(0, 0.0), (1, 0.0), (2, 5.0), (3, 7.0), (4, 0.0)]);
        let (st, ac) = extract_segments(&s, &[false; 1440]);
        assert_eq!(st.durations(), vec![1, 2]);
        assert_eq!(ac.durations(), vec![2]);
    }

    #[test]
    fn sleep_minutes_are_excluded() {
        let s = steps(&[(0, 0.0), (1, 0.0), (2, 5.0)]);
        let (st, ac) = extract_segments(&s, &[true; 1440]);
        assert_eq!(st.total(), 0);
        assert_eq!(ac.total(), 0);

        let mut mask = [false; 1440];
        mask[1] = true;
        let (st, ac) = extract_segments(&s, &mask);
        assert_eq!(st.durations(), vec![1]);
        assert_eq!(ac.durations(), vec![1]);
    }

    #[test]
    fn gaps_in_stream_split_runs() {
        let s = steps(&[(0, 0.0), (1, 0.0), (5, 0.0)]);
        let (st, _) = extract_segments(&s, &[false; 1440]);
        assert_eq!(st.durations(), vec![1, 2]);
    }

    #[test]
    fn information_entropy_cases() {
        let single = SegmentHistogram::from_counts(SegmentKind::Active, [(3, 7)]);
        assert_eq!(information_entropy(&single).unwrap(), 0.0);

        let uniform =
            SegmentHistogram::from_counts(SegmentKind::Active, [(1, 2), (2, 2), (3, 2), (4, 2)]);
        assert_relative_eq!(information_entropy(&uniform).unwrap(), 4f64.ln(), epsilon = 1e-12);

        let skewed = SegmentHistogram::from_counts(SegmentKind::Stationary, [(1, 3), (2, 1)]);
        let expected = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert_relative_eq!(information_entropy(&skewed).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 0.5623351446188083, epsilon = 1e-12);

        assert_eq!(
            information_entropy(&SegmentHistogram::new(SegmentKind::Active)),
            Err(Error::EmptyHistogram)
        );
    }
}
