//! Trials, label transcripts, feature selection, and the dataset catalog.
//!
//! On-disk formats:
//!
//! * kinematics: one frame per line, numeric cells separated by whitespace
//!   or commas, sampled at 30 Hz;
//! * transcripts: `start end label` per line, 0-based inclusive frame
//!   bounds, the label being the rest of the line;
//! * catalog manifest: TOML, see [`build_catalog`].

mod catalog;
mod features;
mod mp;
mod transcript;
mod trial;

pub use catalog::{
    build_catalog, dataset_has_gestures, validate_catalog, Catalog, CatalogEntry, SubjectId, TaskSummary, TrialKey,
    ValidationSummary,
};
pub use features::{select_features, ArmColumns, ArmSelection, FeatureSpec, ARM_STRIDE};
pub use mp::{MotionPrimitive, Tool, Verb, IDLE};
pub use transcript::{
    densify, load_transcript, parse_transcript, resegment, split_by_arm, Granularity, LabelTranscript, Segment,
    Vocabulary,
};
pub use trial::{load_trial_kinematics, parse_kinematics, KinematicTrial, SAMPLE_RATE_HZ};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: expected {expected} cells, found {actual}")]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{path}:{line}: cell {column} is not a finite number: {value:?}")]
    NonNumericCell {
        path: PathBuf,
        line: usize,
        column: usize,
        value: String,
    },
    #[error("{0}: no frames")]
    EmptyFile(PathBuf),
    #[error("expected {expected} channels, found {actual}")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("line {line}: malformed transcript record {record:?}")]
    MalformedRecord { line: usize, record: String },
    #[error("segment {start}-{end} has start after end")]
    InvalidSegment { start: usize, end: usize },
    #[error("segment starting at {start} overlaps the previous segment ending at {previous_end}")]
    OverlappingSegments { start: usize, previous_end: usize },
    #[error("segment starting at {start} precedes the previous segment starting at {previous_start}")]
    OutOfOrderSegments { start: usize, previous_start: usize },
    #[error("label {0:?} is not in the vocabulary")]
    UnknownLabel(String),
    #[error("segment ends at frame {end} but the trial has {length} frames")]
    SegmentBeyondTrial { end: usize, length: usize },
    #[error("frame {0} is unlabeled and no fill label was given")]
    GapWithoutFill(usize),
    #[error("per-arm transcript does not cover frame {0}")]
    NotTiled(usize),
    #[error("motion primitive {0:?} has no tool attribution")]
    UnattributedSegment(String),
    #[error("invalid motion primitive label {0:?}")]
    InvalidMotionPrimitive(String),
    #[error("column {index} out of range for {channels} channels")]
    IndexOutOfRange { index: usize, channels: usize },
    #[error("column {0} selected twice")]
    DuplicateColumn(usize),
    #[error("trial {key} declares a {granularity} transcript that does not exist: {path}")]
    MissingTranscript {
        key: String,
        granularity: String,
        path: PathBuf,
    },
    #[error("duplicate trial key {0}")]
    DuplicateTrialKey(String),
    #[error("trial {0} declares gesture labels but its dataset has none")]
    GestureUnavailable(String),
    #[error("trial {key} has no {granularity} transcript")]
    GranularityUnavailable { key: String, granularity: String },
    #[error("task {task}: trials disagree on channel count ({first} vs {other})")]
    InconsistentChannels { task: String, first: usize, other: usize },
    #[error("manifest error: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
