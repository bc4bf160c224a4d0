use serde::{Deserialize, Serialize};

use super::{average_precision, edit_score, frame_accuracy, map_report, run_length_segments, MetricsError, Result};

/// Model output and ground truth for one test trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPrediction {
    pub name: String,
    pub predicted: Vec<usize>,
    pub truth: Vec<usize>,
    /// Per-class frame scores, class-major: `scores[c * frames + t]`.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial: String,
    pub frames: usize,
    pub accuracy: f64,
    pub edit: f64,
}

/// One-vs-rest AP of a class. `ap` is `None` when the class has no
/// ground-truth frames. `support` counts ground-truth segments,
/// `frame_support` ground-truth frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub label: String,
    pub ap: Option<f64>,
    pub support: usize,
    pub frame_support: usize,
}

/// Scores of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trials: Vec<TrialMetrics>,
    pub mean_accuracy: f64,
    pub mean_edit: f64,
    pub classes: Vec<ClassAp>,
    pub macro_map: Option<f64>,
    pub micro_map: Option<f64>,
}

/// Accuracy and edit score per trial, averaged over trials; AP per class
/// over frames pooled from all trials; macro and segment-weighted micro mAP.
pub fn evaluate(trials: &[TrialPrediction], class_labels: &[String]) -> Result<MetricsReport> {
    if trials.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let classes = class_labels.len();
    let mut per_trial = Vec::with_capacity(trials.len());
    let mut pooled_scores: Vec<Vec<f64>> = vec![Vec::new(); classes];
    let mut pooled_truth: Vec<usize> = Vec::new();
    let mut segment_support = vec![0usize; classes];
    for tr in trials {
        let frames = tr.truth.len();
        if tr.scores.len() != classes * frames {
            return Err(MetricsError::LengthMismatch {
                pred: tr.scores.len(),
                truth: classes * frames,
            });
        }
        per_trial.push(TrialMetrics {
            trial: tr.name.clone(),
            frames,
            accuracy: frame_accuracy(&tr.predicted, &tr.truth)?,
            edit: edit_score(&tr.predicted, &tr.truth)?,
        });
        for &c in run_length_segments(&tr.truth)?.labels() {
            if c < classes {
                segment_support[c] += 1;
            }
        }
        for (c, pooled) in pooled_scores.iter_mut().enumerate() {
            pooled.extend_from_slice(&tr.scores[c * frames..(c + 1) * frames]);
        }
        pooled_truth.extend_from_slice(&tr.truth);
    }
    let mut class_aps = Vec::with_capacity(classes);
    for (c, label) in class_labels.iter().enumerate() {
        let positives: Vec<bool> = pooled_truth.iter().map(|&y| y == c).collect();
        let ap = match average_precision(&pooled_scores[c], &positives) {
            Ok(ap) => Some(ap),
            Err(MetricsError::NoPositives) => None,
            Err(e) => return Err(e),
        };
        class_aps.push(ClassAp {
            label: label.clone(),
            ap,
            support: segment_support[c],
            frame_support: positives.iter().filter(|&&p| p).count(),
        });
    }
    let (macro_map, micro_map) = summarize(&class_aps);
    let n = per_trial.len() as f64;
    Ok(MetricsReport {
        mean_accuracy: per_trial.iter().map(|t| t.accuracy).sum::<f64>() / n,
        mean_edit: per_trial.iter().map(|t| t.edit).sum::<f64>() / n,
        trials: per_trial,
        classes: class_aps,
        macro_map,
        micro_map,
    })
}

/// Macro and micro mAP over the defined classes, `None` if there are none.
pub fn summarize(classes: &[ClassAp]) -> (Option<f64>, Option<f64>) {
    let aps: Vec<Option<f64>> = classes.iter().map(|c| c.ap).collect();
    let supports: Vec<usize> = classes.iter().map(|c| c.support).collect();
    match map_report(&aps, &supports) {
        Ok(s) => (Some(s.macro_map), Some(s.micro_map)),
        Err(_) => (None, None),
    }
}
