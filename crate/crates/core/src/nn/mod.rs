//! Dense tensors, row-wise convolution, dense layers, losses and Adam, with
//! hand-written backward passes.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod tensor;

pub use adam::{adam_step, AdamState, DEFAULT_LR};
pub use gradcheck::{gradient_check, gradient_check_report, relative_error, Differentiable, GradCheckReport, FD_STEP};
pub use layers::{conv1d_forward, dense_forward, Activation, Conv1DLayer, DenseLayer, LayerCache, CONV_CHANNELS};
pub use loss::{cross_entropy, focal_loss, focal_row, mse_loss, softmax, LossSpec, LossTask};
pub use tensor::Tensor2D;
