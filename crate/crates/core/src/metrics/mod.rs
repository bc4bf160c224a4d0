//! Frame accuracy, segmental edit score, and average precision.
//!
//! All scores are percentages in `[0, 100]`.

mod ap;
mod edit;
mod report;

pub use ap::{average_precision, map_report, MapSummary};
pub use edit::{edit_score, levenshtein, run_length_segments, SegmentSequence};
pub use report::{evaluate, summarize, ClassAp, MetricsReport, TrialMetrics, TrialPrediction};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: prediction has {pred} frames, ground truth {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("class has no positive frames")]
    NoPositives,
    #[error("no class has a defined average precision")]
    NoDefinedClasses,
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Percentage of frames where `pred` equals `truth`.
pub fn frame_accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = pred.iter().zip(truth).filter(|(p, g)| p == g).count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy() {
        assert_eq!(frame_accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(frame_accuracy(&['A', 'B'], &['A', 'A']).unwrap(), 50.0);
        assert_eq!(
            frame_accuracy(&[1, 2], &[1]).unwrap_err(),
            MetricsError::LengthMismatch { pred: 2, truth: 1 }
        );
    }
}
