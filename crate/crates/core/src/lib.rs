//! Surgical activity recognition from robot kinematics.
//!
//! The crate covers the whole pipeline: loading kinematic trials and label
//! transcripts, an encoder-decoder temporal convolutional network with
//! hand-written backward passes, leave-one-user-out and leave-one-task-out
//! fold planning, and the accuracy / edit score / mAP evaluation suite.
//!
//! Data-parallel inner loops (convolution rows, fold execution) go through
//! [`par`], which uses rayon when the `parallel` feature is enabled and falls
//! back to plain iteration otherwise.

pub mod crossval;
pub mod dataset;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod runner;
pub mod tcn;

pub use par::Execution;

/// Crate version recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
