use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_variant, train, Batch, ModelConfig};
use crate::util::sub_seed;

/// One hyperparameter assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub shared_widths: Vec<usize>,
    pub branch_width: usize,
    pub learning_rate: f64,
    #[serde(default = "default_gamma")]
    pub focal_gamma: f64,
    /// Epoch cap during cross-validation.
    pub epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_gamma() -> f64 {
    2.0
}

fn default_patience() -> usize {
    20
}

fn default_batch() -> usize {
    16
}

impl GridPoint {
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        let mut c = base.clone();
        c.shared_widths = self.shared_widths.clone();
        c.branch_width = self.branch_width;
        c.focal_gamma = self.focal_gamma;
        c.train.learning_rate = self.learning_rate;
        c.train.epochs = self.epochs;
        c.train.patience = self.patience;
        c.train.batch_size = self.batch_size;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "point")]
    pub points: Vec<GridPoint>,
}

impl Default for GridSpec {
    /// Two widths by two learning rates.
    fn default() -> Self {
        let mut points = Vec::new();
        for (shared, branch) in [(vec![32, 16], 8), (vec![16], 8)] {
            for lr in [0.01, 0.003] {
                points.push(GridPoint {
                    shared_widths: shared.clone(),
                    branch_width: branch,
                    learning_rate: lr,
                    focal_gamma: default_gamma(),
                    epochs: 200,
                    patience: default_patience(),
                    batch_size: default_batch(),
                });
            }
        }
        Self { points }
    }
}

impl GridSpec {
    pub fn single(point: GridPoint) -> Self {
        Self { points: vec![point] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Config("grid has no points".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            let ok = p.learning_rate.is_finite()
                && p.learning_rate >= 0.0
                && p.focal_gamma.is_finite()
                && p.focal_gamma >= 0.0
                && p.epochs > 0
                && p.batch_size > 0
                && p.branch_width > 0
                && !p.shared_widths.is_empty()
                && p.shared_widths.iter().all(|w| *w > 0);
            if !ok {
                return Err(Error::Config(format!("grid point {i} has a non-positive or non-finite value")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let g: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: usize,
    /// Mean best validation loss over folds per point; infinite if training diverged.
    pub cv_loss: Vec<f64>,
    /// Mean early-stopping epoch per point.
    pub mean_best_epoch: Vec<f64>,
    pub param_counts: Vec<usize>,
}

impl GridSearchResult {
    /// Epochs for the final refit: the rounded mean early-stopping epoch.
    pub fn final_epochs(&self) -> usize {
        (self.mean_best_epoch[self.best].round() as usize).max(1)
    }
}

/// Cross-validated grid search. `folds` index rows of `data`; every fold
/// serves once as the early-stopping validation set. The lowest mean loss
/// wins, ties going to fewer parameters and then to grid order.
pub fn grid_search(
    data: &Batch,
    folds: &[Vec<usize>],
    base: &ModelConfig,
    grid: &GridSpec,
    seed: u64,
) -> Result<GridSearchResult> {
    grid.validate()?;
    let usable: Vec<usize> = (0..folds.len()).filter(|&k| !folds[k].is_empty()).collect();
    if usable.len() < 2 {
        return Err(Error::TooSmall { needed: 2, got: usable.len() });
    }
    let mut cv_loss = Vec::with_capacity(grid.points.len());
    let mut mean_best_epoch = Vec::with_capacity(grid.points.len());
    let mut param_counts = Vec::with_capacity(grid.points.len());
    for point in &grid.points {
        let mut cfg = point.apply(base);
        param_counts.push(make_variant(&cfg)?.param_count());
        let mut losses = 0.0;
        let mut epochs = 0.0;
        let mut diverged = false;
        for &k in &usable {
            let train_idx: Vec<usize> = usable
                .iter()
                .filter(|&&j| j != k)
                .flat_map(|&j| folds[j].iter().copied())
                .collect();
            // Same stream for every point on a fold, so candidates differ only in
            // their settings.
            cfg.train.seed = sub_seed(seed, &format!("fold{k}"));
            let mut net = make_variant(&cfg)?;
            match train(&mut net, &data.select(&train_idx), Some(&data.select(&folds[k]))) {
                Ok(rep) => {
                    losses += rep.best_val.unwrap_or(f64::INFINITY);
                    epochs += rep.best_epoch as f64;
                }
                Err(Error::DivergenceDetected { .. }) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let n = usable.len() as f64;
        cv_loss.push(if diverged { f64::INFINITY } else { losses / n });
        mean_best_epoch.push(if diverged { 1.0 } else { epochs / n });
    }
    let mut best = 0;
    for p in 1..grid.points.len() {
        let better = cv_loss[p] < cv_loss[best]
            || (cv_loss[p] == cv_loss[best] && param_counts[p] < param_counts[best]);
        if better {
            best = p;
        }
    }
    Ok(GridSearchResult {
        best,
        cv_loss,
        mean_best_epoch,
        param_counts,
    })
}
