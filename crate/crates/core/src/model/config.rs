use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::Label;
use crate::error::{Error, Result};
use crate::nn::{LossSpec, CONV_CHANNELS, DEFAULT_LR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    Regression,
    Binary,
    ThreeClass,
}

impl TaskMode {
    pub const ALL: [TaskMode; 3] = [TaskMode::Binary, TaskMode::ThreeClass, TaskMode::Regression];

    /// Outputs per head: one value or one logit per class.
    pub fn outputs(self) -> usize {
        match self {
            TaskMode::Regression => 1,
            TaskMode::Binary => 2,
            TaskMode::ThreeClass => 3,
        }
    }

    pub fn n_classes(self) -> Option<usize> {
        match self {
            TaskMode::Regression => None,
            t => Some(t.outputs()),
        }
    }

    pub fn is_classification(self) -> bool {
        self != TaskMode::Regression
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskMode::Regression => "regression",
            TaskMode::Binary => "binary",
            TaskMode::ThreeClass => "three",
        }
    }
}

impl FromStr for TaskMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regression" | "reg" => Ok(TaskMode::Regression),
            "binary" | "bin" => Ok(TaskMode::Binary),
            "three" | "three_class" | "3" => Ok(TaskMode::ThreeClass),
            other => Err(Error::Config(format!("unknown task '{other}' (binary, three, regression)"))),
        }
    }
}

/// Network structure. ML-NN trained on one role's rows is the `Ml` structure
/// with a filtered dataset, so it has no variant of its own here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Role branches, five heads per branch.
    Mtml,
    /// Role branches, one head; one model per label.
    Mt,
    /// No role branches, five heads.
    Ml,
    /// No role branches, one head.
    Nn,
}

impl Variant {
    pub fn branched(self) -> bool {
        matches!(self, Variant::Mtml | Variant::Mt)
    }

    pub fn multilabel(self) -> bool {
        matches!(self, Variant::Mtml | Variant::Ml)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Mtml => "mtml",
            Variant::Mt => "mt",
            Variant::Ml => "ml",
            Variant::Nn => "nn",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "mtml" | "mtml-nn" => Ok(Variant::Mtml),
            "mt" | "mt-nn" => Ok(Variant::Mt),
            "ml" | "ml-nn" => Ok(Variant::Ml),
            "nn" => Ok(Variant::Nn),
            other => Err(Error::InvalidVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Early stopping patience in epochs (only with a validation set).
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 16,
            seed: 0,
            learning_rate: DEFAULT_LR,
            patience: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_features: usize,
    pub conv_channels: usize,
    pub shared_widths: Vec<usize>,
    pub branch_width: usize,
    pub variant: Variant,
    pub task: TaskMode,
    /// Labels predicted by the heads, in head order.
    pub labels: Vec<Label>,
    pub focal_gamma: f64,
    /// Focal class weights per head; empty means unweighted.
    #[serde(default)]
    pub focal_alpha: Vec<Vec<f64>>,
    pub train: TrainConfig,
}

impl ModelConfig {
    /// Default widths; single-label variants predict `Label::Alertness`
    /// until a label is chosen with [`ModelConfig::with_label`].
    pub fn new(n_features: usize, variant: Variant, task: TaskMode) -> Self {
        let labels = if variant.multilabel() {
            Label::ALL.to_vec()
        } else {
            vec![Label::Alertness]
        };
        Self {
            n_features,
            conv_channels: CONV_CHANNELS,
            shared_widths: vec![64, 32],
            branch_width: 16,
            variant,
            task,
            labels,
            focal_gamma: 2.0,
            focal_alpha: Vec::new(),
            train: TrainConfig::default(),
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.labels = vec![label];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_features == 0 {
            return bad("n_features must be positive".into());
        }
        if self.conv_channels == 0 || self.branch_width == 0 || self.shared_widths.contains(&0) {
            return bad("layer widths must be positive".into());
        }
        if self.shared_widths.is_empty() {
            return bad("at least one shared layer is required".into());
        }
        let want = if self.variant.multilabel() { Label::COUNT } else { 1 };
        if self.labels.len() != want {
            return Err(Error::InvalidVariant(format!(
                "{} expects {want} label head(s), config lists {}",
                self.variant.as_str(),
                self.labels.len()
            )));
        }
        if self.variant.multilabel() && self.labels != Label::ALL {
            return bad("multilabel heads must follow the canonical label order".into());
        }
        if !self.focal_alpha.is_empty() {
            if self.focal_alpha.len() != self.labels.len() {
                return bad("focal_alpha needs one row per head".into());
            }
            if self.focal_alpha.iter().any(|a| a.len() != self.task.outputs()) {
                return bad("focal_alpha rows need one weight per class".into());
            }
        }
        self.loss_spec(0).validate()?;
        let t = &self.train;
        if t.epochs == 0 || t.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if !(t.learning_rate >= 0.0 && t.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be >= 0, got {}", t.learning_rate));
        }
        Ok(())
    }

    pub fn loss_spec(&self, head: usize) -> LossSpec {
        if self.task.is_classification() {
            LossSpec {
                task: crate::nn::LossTask::Classification,
                gamma: self.focal_gamma,
                alpha: self.focal_alpha.get(head).cloned().unwrap_or_default(),
            }
        } else {
            LossSpec::mse()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = ModelConfig::new(40, Variant::Mt, TaskMode::ThreeClass).with_label(Label::Stress);
        c.focal_alpha = vec![vec![0.5, 1.25, 1.25]];
        let text = c.to_toml().unwrap();
        assert_eq!(ModelConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn validation() {
        let mut c = ModelConfig::new(40, Variant::Mtml, TaskMode::Binary);
        c.labels.pop();
        assert!(matches!(c.validate(), Err(Error::InvalidVariant(_))));
        assert!(matches!("rf".parse::<Variant>(), Err(Error::InvalidVariant(_))));
        assert!(ModelConfig::from_toml("n_features = 3").is_err());
    }
}
