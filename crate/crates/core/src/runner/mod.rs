//! Experiment configuration, synthetic data, fold execution, and reports.

mod config;
mod experiment;
mod report;
mod synth;

pub use config::{expand_tasks, CvMode, ExperimentConfig, FeatureConfig, ModelOverrides};
pub use experiment::{
    fold_seed, run_experiment, Access, Experiment, ExperimentReport, FoldOutcome, FoldReport, FoldStatus, Phase, Timing,
};
pub use report::{
    combine_classes, emit_report, load_report, render_aggregate, render_fold_table, render_map_table, render_report,
    render_summary, render_table, REPORT_JSON, REPORT_TEXT,
};
pub use synth::{
    dataset_of, generate_synthetic_dataset, SynthDataset, SynthOptions, SYNTH_CHANNELS, SYNTH_LEARNING_RATE,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::crossval::CrossvalError;
use crate::dataset::DatasetError;
use crate::metrics::MetricsError;
use crate::tcn::TcnError;

/// Process exit codes of the command-line tool.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const DATA: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Crossval(#[from] CrossvalError),
    #[error(transparent)]
    Model(#[from] TcnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: String,
        #[source]
        source: Box<RunnerError>,
    },
}

impl RunnerError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        RunnerError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// 1 for configuration errors, 2 for data validation errors, 3 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Config(_) => exit_code::CONFIG,
            RunnerError::Crossval(CrossvalError::Io(_)) => exit_code::RUNTIME,
            RunnerError::Crossval(_) => exit_code::CONFIG,
            RunnerError::Dataset(_) => exit_code::DATA,
            RunnerError::Model(TcnError::InvalidConfig(_)) => exit_code::CONFIG,
            RunnerError::Model(_) | RunnerError::Metrics(_) | RunnerError::Io { .. } => exit_code::RUNTIME,
            RunnerError::Fold { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RunnerError>;
