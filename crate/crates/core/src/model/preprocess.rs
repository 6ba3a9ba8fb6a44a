use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DailyFeatureVector, FeatureSchema};
use crate::nn::Tensor2D;

/// Mean imputation and z-scoring, fit on training rows only. Missing
/// one-hot entries become 0 before scaling; other missing entries take
/// the training mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub one_hot: Vec<bool>,
}

impl Preprocessor {
    pub fn fit(rows: &[DailyFeatureVector], schema: &FeatureSchema) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientRows { needed: 1, got: 0 });
        }
        let width = schema.len();
        let mut one_hot = vec![false; width];
        for g in schema.one_hot_groups() {
            for j in g {
                one_hot[j] = true;
            }
        }
        let mut means = vec![0.0; width];
        let mut sds = vec![1.0; width];
        for j in 0..width {
            let col: Vec<f64> = rows
                .iter()
                .map(|r| {
                    if !r.missing[j] {
                        r.values[j]
                    } else if one_hot[j] {
                        0.0
                    } else {
                        f64::NAN
                    }
                })
                .filter(|v| !v.is_nan())
                .collect();
            if col.is_empty() {
                continue;
            }
            let m = col.iter().sum::<f64>() / col.len() as f64;
            means[j] = m;
            if col.len() > 1 {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (col.len() - 1) as f64;
                if var.sqrt() > 1e-12 {
                    sds[j] = var.sqrt();
                }
            }
        }
        Ok(Self { means, sds, one_hot })
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &DailyFeatureVector) -> Result<Vec<f64>> {
        if row.values.len() != self.width() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} features, preprocessor expects {}",
                row.values.len(),
                self.width()
            )));
        }
        Ok((0..self.width())
            .map(|j| {
                let raw = if !row.missing[j] {
                    row.values[j]
                } else if self.one_hot[j] {
                    0.0
                } else {
                    self.means[j]
                };
                (raw - self.means[j]) / self.sds[j]
            })
            .collect())
    }

    pub fn transform(&self, rows: &[DailyFeatureVector]) -> Result<Tensor2D> {
        let data = rows
            .iter()
            .map(|r| self.transform_row(r))
            .collect::<Result<Vec<_>>>()?;
        Tensor2D::from_rows(&data)
    }
}
