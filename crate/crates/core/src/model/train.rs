use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TaskMode;
use super::network::{Batch, MTMLNetwork};
use crate::domain::Label;
use crate::error::{Error, Result};
use crate::nn::{focal_row, AdamState};
use crate::util::sub_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss per row for each epoch run.
    pub train_loss: Vec<f64>,
    /// Validation metric per epoch (empty without a validation set).
    pub val_loss: Vec<f64>,
    /// Number of epochs whose parameters were kept.
    pub best_epoch: usize,
    pub best_val: Option<f64>,
}

/// Validation metric: MAE on the 0-100 scale for regression, mean focal
/// loss per row and label for classification.
pub fn validation_loss(net: &MTMLNetwork, batch: &Batch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let outs = net.forward(&batch.x, &batch.roles)?;
    let mut total = 0.0;
    for (h, label) in net.labels().iter().enumerate() {
        let alpha = net.config.focal_alpha.get(h);
        for r in 0..batch.len() {
            let y = batch.targets[r][label.index()];
            total += match net.task() {
                TaskMode::Regression => (100.0 * outs[h].get(r, 0) - y).abs(),
                _ => {
                    let c = y as usize;
                    focal_row(outs[h].row(r), c, net.config.focal_gamma, alpha.map_or(1.0, |a| a[c])).0
                }
            };
        }
    }
    Ok(total / (batch.len() * net.labels().len()) as f64)
}

/// Mini-batch Adam on shuffled epochs. An untrained network first gets its
/// output biases set from `data`. With a validation batch, training stops
/// after `patience` epochs without improvement and the best parameters are
/// restored.
pub fn train(net: &mut MTMLNetwork, data: &Batch, validation: Option<&Batch>) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let cfg = net.config.train.clone();
    if !net.trained {
        net.init_output_bias(data);
    }
    let sizes: Vec<usize> = net.blocks().iter().map(|b| b.len()).collect();
    let mut adam = AdamState::new(&sizes, cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, "shuffle"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        best_val: None,
    };
    let mut best_params: Option<Vec<Vec<f64>>> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mb = data.select(chunk);
            let (loss, grads) = net.masked_batch_loss(&mb).map_err(|e| match e {
                Error::NonFinite(_) => Error::DivergenceDetected { epoch, loss: f64::NAN },
                e => e,
            })?;
            total += loss;
            adam.step(&mut net.blocks_mut(), &grads)?;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || net.blocks().iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::DivergenceDetected { epoch, loss: mean });
        }
        report.train_loss.push(mean);

        if let Some(val) = validation {
            let v = validation_loss(net, val)?;
            report.val_loss.push(v);
            if report.best_val.is_none_or(|b| v < b) {
                report.best_val = Some(v);
                report.best_epoch = epoch;
                best_params = Some(net.blocks().iter().map(|b| b.to_vec()).collect());
            } else if epoch - report.best_epoch >= cfg.patience {
                break;
            }
        } else {
            report.best_epoch = epoch;
        }
    }
    if let Some(best) = best_params {
        for (dst, src) in net.blocks_mut().into_iter().zip(best) {
            dst.copy_from_slice(&src);
        }
    }
    net.trained = true;
    Ok(report)
}

/// Inverse class frequency weights normalized to mean 1, per label; classes
/// absent from `targets` get the largest observed weight.
pub fn inverse_frequency_alpha(targets: &[[f64; Label::COUNT]], labels: &[Label], n_classes: usize) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|l| {
            let mut counts = vec![0usize; n_classes];
            for t in targets {
                let c = t[l.index()] as usize;
                if c < n_classes {
                    counts[c] += 1;
                }
            }
            let inv: Vec<f64> = counts.iter().map(|&c| if c > 0 { 1.0 / c as f64 } else { 0.0 }).collect();
            let max = inv.iter().copied().fold(0.0, f64::max);
            let inv: Vec<f64> = inv.iter().map(|&v| if v > 0.0 { v } else { max.max(1.0) }).collect();
            let mean = inv.iter().sum::<f64>() / n_classes as f64;
            inv.iter().map(|v| v / mean).collect()
        })
        .collect()
}
