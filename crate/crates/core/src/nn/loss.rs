use serde::{Deserialize, Serialize};

use super::tensor::Tensor2D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTask {
    Regression,
    Classification,
}

/// Squared error for regression, focal loss `-alpha_t (1 - p_t)^gamma ln p_t`
/// for classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub task: LossTask,
    pub gamma: f64,
    /// Per-class weights; empty means 1 for every class.
    pub alpha: Vec<f64>,
}

impl LossSpec {
    pub fn mse() -> Self {
        Self {
            task: LossTask::Regression,
            gamma: 0.0,
            alpha: Vec::new(),
        }
    }

    pub fn focal(gamma: f64, alpha: Vec<f64>) -> Result<Self> {
        let s = Self {
            task: LossTask::Classification,
            gamma,
            alpha,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("focal gamma must be >= 0, got {}", self.gamma)));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::Config("focal alpha weights must be > 0".into()));
        }
        Ok(())
    }

    pub fn alpha_for(&self, class: usize) -> f64 {
        self.alpha.get(class).copied().unwrap_or(1.0)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(logits: &[f64], t: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[t] - lse
}

/// Focal loss of one row of logits and its gradient with respect to them.
pub fn focal_row(logits: &[f64], target: usize, gamma: f64, alpha_t: f64) -> (f64, Vec<f64>) {
    let p = softmax(logits);
    let log_pt = log_softmax_at(logits, target);
    let pt = p[target];
    let q = 1.0 - pt;
    let loss = -alpha_t * q.powf(gamma) * log_pt;
    // d/dp_t of the focal term, folded with dp_t/dz_j = p_t (delta_tj - p_j)
    let first = if gamma == 0.0 || q == 0.0 {
        0.0
    } else {
        gamma * q.powf(gamma - 1.0) * pt * log_pt
    };
    let coef = alpha_t * (first - q.powf(gamma));
    let grad = p
        .iter()
        .enumerate()
        .map(|(j, &pj)| coef * (if j == target { 1.0 } else { 0.0 } - pj))
        .collect();
    (loss, grad)
}

fn check_classes(logits: &Tensor2D, targets: &[usize]) -> Result<()> {
    if targets.len() != logits.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} rows",
            targets.len(),
            logits.rows()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= logits.cols()) {
        return Err(Error::InvalidClass {
            class: t,
            n_classes: logits.cols(),
        });
    }
    Ok(())
}

/// Batch-mean focal loss with gradient on the logits.
pub fn focal_loss(logits: &Tensor2D, targets: &[usize], spec: &LossSpec) -> Result<(f64, Tensor2D)> {
    check_classes(logits, targets)?;
    spec.validate()?;
    let n = logits.rows() as f64;
    let mut grad = Tensor2D::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let (l, g) = focal_row(logits.row(r), t, spec.gamma, spec.alpha_for(t));
        total += l;
        for (d, v) in grad.row_mut(r).iter_mut().zip(g) {
            *d = v / n;
        }
    }
    Ok((total / n, grad))
}

/// Batch-mean softmax cross-entropy with gradient on the logits.
pub fn cross_entropy(logits: &Tensor2D, targets: &[usize]) -> Result<(f64, Tensor2D)> {
    check_classes(logits, targets)?;
    let n = logits.rows() as f64;
    let mut grad = Tensor2D::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        total -= log_softmax_at(logits.row(r), t);
        let p = softmax(logits.row(r));
        for (j, (d, pj)) in grad.row_mut(r).iter_mut().zip(p).enumerate() {
            *d = (pj - if j == t { 1.0 } else { 0.0 }) / n;
        }
    }
    Ok((total / n, grad))
}

/// Mean squared error over all entries, gradient `2 (pred - target) / n`.
pub fn mse_loss(pred: &Tensor2D, target: &Tensor2D) -> Result<(f64, Tensor2D)> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.data().len() as f64;
    let mut grad = pred.clone();
    let mut total = 0.0;
    for (g, &t) in grad.data_mut().iter_mut().zip(target.data()) {
        let d = *g - t;
        total += d * d;
        *g = 2.0 * d / n;
    }
    Ok((total / n, grad))
}
