//! Encoder-decoder temporal convolutional network.
//!
//! Encoder block: conv → ReLU → channel norm → max-pool(2).
//! Decoder block: upsample(2) → conv → ReLU → channel norm.
//! A 1×1 convolution maps the decoder output to class logits, which are then
//! cropped or edge-padded back to the input length.

mod checkpoint;
mod config;
mod model;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{CvDefaults, ModelConfig, DEFAULT_EPOCHS, DEFAULT_FILTERS};
pub use model::{ForwardTrace, ModelGrads, TcnModel};
pub use train::{
    argmax_labels, compute_kernel_size, predict_labels, train_fold, FeatureScaler, PreparedTrial, TrainRecord,
};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TcnError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("no labeled segments to derive a kernel size from")]
    EmptyTranscripts,
    #[error("sequence of {length} frames is shorter than the minimum {minimum}")]
    SequenceTooShort { length: usize, minimum: usize },
    #[error("trial {trial}: label {label} outside a {classes}-class vocabulary")]
    VocabularyMismatch {
        trial: String,
        label: usize,
        classes: usize,
    },
    #[error("trial {0} is not in the fold's training set")]
    NotInTrainingSet(String),
    #[error("non-finite loss {loss} at epoch {epoch} on trial {trial}")]
    NonFiniteLoss { epoch: usize, trial: String, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T> = std::result::Result<T, TcnError>;
