use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::sub_seed;

pub const REPETITIONS: usize = 10;
pub const FOLDS: usize = 10;
pub const TEST_FRACTION: f64 = 0.2;
pub const MIN_ROWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Participant-days assigned independently.
    Row,
    /// Whole participants held out together.
    Participant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Cross-validation folds partitioning `train`.
    pub folds: Vec<Vec<usize>>,
}

impl Repetition {
    /// Training rows outside fold `k`.
    pub fn fold_train(&self, k: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub seed: u64,
    pub mode: SplitMode,
    pub repetitions: Vec<Repetition>,
}

fn folds_of(rng: &mut ChaCha8Rng, train: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut shuffled = train.to_vec();
    shuffled.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (i, r) in shuffled.into_iter().enumerate() {
        folds[i % k].push(r);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Ten seeded 80/20 row partitions, each with ten training folds.
pub fn make_split_plan(n_rows: usize, seed: u64) -> Result<SplitPlan> {
    make_split_plan_sized(n_rows, seed, REPETITIONS, FOLDS)
}

pub fn make_split_plan_sized(n_rows: usize, seed: u64, repetitions: usize, folds: usize) -> Result<SplitPlan> {
    if repetitions == 0 || folds < 2 {
        return Err(Error::Config("need at least one repetition and two folds".into()));
    }
    if n_rows < MIN_ROWS {
        return Err(Error::TooSmall { needed: MIN_ROWS, got: n_rows });
    }
    let n_test = (n_rows as f64 * TEST_FRACTION).round() as usize;
    let repetitions = (0..repetitions)
        .map(|r| {
            let rep_seed = sub_seed(seed, &format!("split/{r}"));
            let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
            let mut idx: Vec<usize> = (0..n_rows).collect();
            idx.shuffle(&mut rng);
            let mut test = idx[..n_test].to_vec();
            let mut train = idx[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            let folds = folds_of(&mut rng, &train, folds);
            Repetition { seed: rep_seed, train, test, folds }
        })
        .collect();
    Ok(SplitPlan { seed, mode: SplitMode::Row, repetitions })
}

/// Like [`make_split_plan`] but holds out whole participants until at least
/// a fifth of the rows are in the test set.
pub fn make_participant_split_plan(participants: &[String], seed: u64) -> Result<SplitPlan> {
    make_participant_split_plan_sized(participants, seed, REPETITIONS, FOLDS)
}

pub fn make_participant_split_plan_sized(
    participants: &[String],
    seed: u64,
    repetitions: usize,
    folds: usize,
) -> Result<SplitPlan> {
    if repetitions == 0 || folds < 2 {
        return Err(Error::Config("need at least one repetition and two folds".into()));
    }
    let n_rows = participants.len();
    if n_rows < MIN_ROWS {
        return Err(Error::TooSmall { needed: MIN_ROWS, got: n_rows });
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in participants.iter().enumerate() {
        groups.entry(p.as_str()).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::TooSmall { needed: 2, got: groups.len() });
    }
    let want = (n_rows as f64 * TEST_FRACTION).round() as usize;
    let names: Vec<&str> = groups.keys().copied().collect();
    let repetitions = (0..repetitions)
        .map(|r| {
            let rep_seed = sub_seed(seed, &format!("participant-split/{r}"));
            let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
            let mut order = names.clone();
            order.shuffle(&mut rng);
            let mut test = Vec::new();
            for (i, name) in order.iter().enumerate() {
                if test.len() >= want || i + 1 == order.len() {
                    break;
                }
                test.extend(&groups[name]);
            }
            test.sort_unstable();
            let train: Vec<usize> = (0..n_rows).filter(|i| test.binary_search(i).is_err()).collect();
            let folds = folds_of(&mut rng, &train, folds.min(train.len()));
            Repetition { seed: rep_seed, train, test, folds }
        })
        .collect();
    Ok(SplitPlan { seed, mode: SplitMode::Participant, repetitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_partition(plan: &SplitPlan, n: usize) {
        for rep in &plan.repetitions {
            let mut all: Vec<usize> = rep.train.iter().chain(&rep.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            let mut folded: Vec<usize> = rep.folds.iter().flatten().copied().collect();
            folded.sort_unstable();
            assert_eq!(folded, rep.train);
        }
    }

    #[test]
    fn hundred_rows_give_twenty_test() {
        let plan = make_split_plan(100, 3).unwrap();
        assert_eq!(plan.repetitions.len(), REPETITIONS);
        for rep in &plan.repetitions {
            assert_eq!(rep.test.len(), 20);
            assert_eq!(rep.folds.len(), FOLDS);
        }
    }

    #[test]
    fn same_seed_same_plan() {
        assert_eq!(make_split_plan(57, 9).unwrap(), make_split_plan(57, 9).unwrap());
        assert_ne!(make_split_plan(57, 9).unwrap(), make_split_plan(57, 10).unwrap());
    }

    #[test]
    fn too_small() {
        assert!(matches!(make_split_plan(19, 0), Err(Error::TooSmall { needed: 20, got: 19 })));
    }

    #[test]
    fn partitions_for_ten_seeds() {
        for seed in 0..10 {
            check_partition(&make_split_plan(241, seed).unwrap(), 241);
        }
    }

    #[test]
    fn participant_plan_keeps_people_together() {
        let people: Vec<String> = (0..60).map(|i| format!("p{}", i % 7)).collect();
        let plan = make_participant_split_plan(&people, 1).unwrap();
        check_partition(&plan, 60);
        for rep in &plan.repetitions {
            for t in &rep.test {
                assert!(rep.train.iter().all(|r| people[*r] != people[*t]));
            }
            assert!(rep.test.len() >= 12);
        }
    }

    proptest! {
        #[test]
        fn folds_partition_training(n in 20usize..300, seed in any::<u64>()) {
            let plan = make_split_plan(n, seed).unwrap();
            for rep in &plan.repetitions {
                let train: std::collections::BTreeSet<_> = rep.train.iter().collect();
                prop_assert!(rep.test.iter().all(|t| !train.contains(t)));
                prop_assert_eq!(rep.train.len() + rep.test.len(), n);
                let sizes: Vec<usize> = rep.folds.iter().map(|f| f.len()).collect();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }
}
