//! Which inputs the first convolution layer of a trained network leans on.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::MTMLNetwork;
use crate::nn::Tensor2D;
use crate::stats::pearson_r;

/// Family-wise significance level before the per-feature divisor.
pub const ALPHA: f64 = 0.05;

/// Mean absolute kernel weight per input feature, over all conv channels.
pub fn conv_weight_importance(net: &MTMLNetwork) -> Result<Vec<f64>> {
    if !net.trained {
        return Err(Error::UntrainedModel);
    }
    let k = &net.conv.kernels;
    let ch = k.rows() as f64;
    Ok((0..k.cols())
        .map(|j| (0..k.rows()).map(|c| k.get(c, j).abs()).sum::<f64>() / ch)
        .collect())
}

/// Pearson r between every input feature and every conv channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCorrelation {
    /// `[feature][channel]`; `None` when either column is constant.
    pub r: Vec<Vec<Option<f64>>>,
    pub p_value: Vec<Vec<Option<f64>>>,
    /// `ALPHA / features`.
    pub threshold: f64,
}

impl ChannelCorrelation {
    pub fn significant(&self, feature: usize, channel: usize) -> bool {
        self.p_value[feature][channel].is_some_and(|p| p < self.threshold)
    }

    pub fn significant_channels(&self, feature: usize) -> usize {
        (0..self.r[feature].len()).filter(|&c| self.significant(feature, c)).count()
    }

    pub fn max_abs_r(&self, feature: usize) -> Option<f64> {
        self.r[feature].iter().flatten().map(|r| r.abs()).reduce(f64::max)
    }
}

/// Correlates conv outputs (before the ReLU, so dead channels still carry
/// a signal) with the inputs that produced them. `x` is preprocessed.
pub fn cnn_output_correlation(net: &MTMLNetwork, x: &Tensor2D) -> Result<ChannelCorrelation> {
    if x.rows() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: x.rows() });
    }
    let out = net.conv.pre_activation(x)?;
    let column = |t: &Tensor2D, j: usize| (0..t.rows()).map(|i| t.get(i, j)).collect::<Vec<f64>>();
    let channels: Vec<Vec<f64>> = (0..out.cols()).map(|c| column(&out, c)).collect();
    let mut r = Vec::with_capacity(x.cols());
    let mut p = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let feat = column(x, j);
        let mut rr = Vec::with_capacity(channels.len());
        let mut pp = Vec::with_capacity(channels.len());
        for ch in &channels {
            match pearson_r(&feat, ch) {
                Ok(c) => {
                    rr.push(Some(c.r));
                    pp.push(Some(c.p_value));
                }
                Err(Error::DegenerateVariance(_)) => {
                    rr.push(None);
                    pp.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        r.push(rr);
        p.push(pp);
    }
    Ok(ChannelCorrelation {
        r,
        p_value: p,
        threshold: ALPHA / x.cols() as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub name: String,
    pub importance: f64,
    pub max_abs_r: Option<f64>,
    pub significant_channels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// Schema order.
    pub features: Vec<FeatureImportance>,
    pub correlation: ChannelCorrelation,
    /// Indices into `features`, most important first.
    pub ranking: Vec<usize>,
}

impl ImportanceReport {
    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|&i| self.features[i].name.as_str()).collect()
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.ranked_names().into_iter().take(k).collect()
    }

    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.ranked_names().iter().position(|n| *n == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,feature,importance,max_abs_r,significant_channels\n");
        for (rank, &i) in self.ranking.iter().enumerate() {
            let f = &self.features[i];
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                rank + 1,
                f.name,
                f.importance,
                f.max_abs_r.map_or(String::new(), |r| r.to_string()),
                f.significant_channels
            );
        }
        s
    }
}

/// Stable descending order; ties keep schema order.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

pub fn importance_report(net: &MTMLNetwork, names: &[String], x: &Tensor2D) -> Result<ImportanceReport> {
    let importance = conv_weight_importance(net)?;
    if names.len() != importance.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature names for {} kernel columns",
            names.len(),
            importance.len()
        )));
    }
    let correlation = cnn_output_correlation(net, x)?;
    let features = names
        .iter()
        .zip(&importance)
        .enumerate()
        .map(|(j, (name, &importance))| FeatureImportance {
            name: name.clone(),
            importance,
            max_abs_r: correlation.max_abs_r(j),
            significant_channels: correlation.significant_channels(j),
        })
        .collect();
    Ok(ImportanceReport {
        features,
        correlation,
        ranking: rank_descending(&importance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, TaskMode, Variant};

    fn net(features: usize) -> MTMLNetwork {
        let mut n = MTMLNetwork::new(ModelConfig::new(features, Variant::Mtml, TaskMode::Regression)).unwrap();
        n.trained = true;
        n
    }

    #[test]
    fn untrained_is_rejected() {
        let mut n = net(4);
        n.trained = false;
        assert!(matches!(conv_weight_importance(&n), Err(Error::UntrainedModel)));
    }

    #[test]
    fn selector_kernel() {
        let mut n = net(4);
        let ch = n.conv.channels();
        n.conv.kernels = Tensor2D::zeros(ch, 4);
        n.conv.kernels.set(0, 2, 1.0);
        n.conv.bias = vec![0.5; ch];
        let imp = conv_weight_importance(&n).unwrap();
        assert_eq!(imp, vec![0.0, 0.0, 1.0 / ch as f64, 0.0]);

        let x = Tensor2D::from_rows(&[
            vec![1.0, 0.0, 3.0, 2.0],
            vec![2.0, 0.0, -1.0, 5.0],
            vec![0.5, 0.0, 4.0, 1.0],
            vec![1.5, 0.0, 0.0, 3.0],
        ])
        .unwrap();
        let c = cnn_output_correlation(&n, &x).unwrap();
        assert!((c.r[2][0].unwrap() - 1.0).abs() < 1e-12);
        // Constant feature and constant channels are missing, not zero.
        assert!(c.r[1].iter().all(|r| r.is_none()));
        assert!(c.r[0][1].is_none());
        assert_eq!(c.threshold, ALPHA / 4.0);
    }

    #[test]
    fn zero_kernels_give_zero_importance() {
        let mut n = net(5);
        n.conv.kernels = Tensor2D::zeros(n.conv.channels(), 5);
        n.conv.bias = vec![1.0; n.conv.channels()];
        assert!(conv_weight_importance(&n).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn too_few_rows() {
        let n = net(2);
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!(matches!(cnn_output_correlation(&n, &x), Err(Error::TooFewSamples { .. })));
    }
}
