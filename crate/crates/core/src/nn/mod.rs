//! Differentiable numeric kernels used by the TCN.
//!
//! Every layer is a pair of free functions: a forward pass and an exact
//! backward pass. Activations are [`Tensor2`] values laid out channel-major
//! (`channels × length`), in 64-bit floats throughout.

mod adam;
mod conv;
mod gradcheck;
mod loss;
mod norm;
mod pool;
mod tensor;
mod upsample;

pub use adam::{adam_update, Adam, AdamConfig, AdamState};
pub use conv::{conv1d_backward, conv1d_forward, ConvGrads, ConvParams};
pub use gradcheck::{finite_diff_check, DEFAULT_FD_STEP};
pub use loss::{softmax, softmax_cross_entropy};
pub use norm::{channel_norm, channel_norm_backward, relu, relu_backward, CHANNEL_NORM_EPS};
pub use pool::{maxpool1d, maxpool1d_backward, PoolIndices};
pub use tensor::Tensor2;
pub use upsample::{restore_length, restore_length_backward, upsample_repeat, upsample_repeat_backward};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("channel mismatch: expected {expected}, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("sequence of length {length} too short for window {width}")]
    TooShort { length: usize, width: usize },
    #[error("target class {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("all frames are masked")]
    AllFramesMasked,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid layer parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, NnError>;
