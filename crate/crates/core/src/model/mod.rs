//! Role-branched multitask multilabel network and its ablations.

pub mod config;
pub mod container;
pub mod network;
pub mod preprocess;
pub mod train;

pub use config::{ModelConfig, TaskMode, TrainConfig, Variant};
pub use container::ModelBundle;
pub use network::{make_variant, predict, Batch, Branch, Gradients, LabelPrediction, MTMLNetwork, HEAD_INIT_SCALE};
pub use preprocess::Preprocessor;
pub use train::{inverse_frequency_alpha, train, validation_loss, TrainReport};
