use std::collections::BTreeMap;
use std::time::Instant;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, Result, TcnError, TcnModel};
use crate::crossval::FoldPlan;
use crate::dataset::{LabelTranscript, TrialKey};
use crate::nn::{softmax, softmax_cross_entropy, Adam, AdamConfig, Tensor2};
use crate::par::Execution;

/// Model-ready features and dense class labels of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTrial {
    pub key: TrialKey,
    pub features: Tensor2,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epoch_loss: Vec<f64>,
    pub epoch_accuracy: Vec<f64>,
    pub wall_clock_seconds: f64,
    pub seed: u64,
}

/// Per-channel z-scoring fitted on training trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a Tensor2>) -> Option<Self> {
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for x in features {
            if sum.is_empty() {
                sum = vec![0.0; x.channels()];
                sq = vec![0.0; x.channels()];
            }
            for c in 0..x.channels().min(sum.len()) {
                for &v in x.row(c) {
                    sum[c] += v;
                    sq[c] += v * v;
                }
            }
            n += x.length();
        }
        if n == 0 {
            return None;
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / n as f64 - m * m).max(0.0).sqrt().max(1e-8))
            .collect();
        Some(FeatureScaler { mean, std })
    }

    pub fn apply(&self, x: &mut Tensor2) {
        for c in 0..x.channels().min(self.mean.len()) {
            let (m, s) = (self.mean[c], self.std[c]);
            for v in x.row_mut(c) {
                *v = (*v - m) / s;
            }
        }
    }
}

/// Kernel width from training transcripts: the mean segment duration of the
/// class with the shortest mean, rounded, forced odd (downwards), and at
/// least 3.
pub fn compute_kernel_size(transcripts: &[LabelTranscript]) -> Result<usize> {
    let mut totals: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for tr in transcripts {
        for seg in tr.segments() {
            let class = tr.vocabulary().class_of(&seg.label).unwrap_or(usize::MAX);
            let e = totals.entry(class).or_default();
            e.0 += seg.duration();
            e.1 += 1;
        }
    }
    let shortest = totals
        .values()
        .map(|&(frames, count)| frames as f64 / count as f64)
        .min_by(f64::total_cmp)
        .ok_or(TcnError::EmptyTranscripts)?;
    let mut k = shortest.round() as usize;
    if k.is_multiple_of(2) {
        k = k.saturating_sub(1);
    }
    Ok(k.max(3))
}

/// Per-frame argmax, ties to the lowest class index.
pub fn argmax_labels(scores: &Tensor2) -> Vec<usize> {
    (0..scores.length())
        .map(|t| {
            let mut best = 0;
            for c in 1..scores.channels() {
                if scores.get(c, t) > scores.get(best, t) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Labels and softmax scores (`classes × T`) for one trial.
pub fn predict_labels(model: &TcnModel, features: &Tensor2, exec: Execution) -> Result<(Vec<usize>, Tensor2)> {
    let scores = softmax(&model.logits(features, exec)?);
    Ok((argmax_labels(&scores), scores))
}

/// Trains on the fold's training trials, one whole trial per Adam step, in
/// a seed-shuffled order each epoch.
///
/// Every trial in `data` must belong to `fold.train_trials`.
pub fn train_fold(
    mut model: TcnModel,
    fold: &FoldPlan,
    data: &[PreparedTrial],
    cfg: &ModelConfig,
    exec: Execution,
) -> Result<(TcnModel, TrainRecord)> {
    cfg.validate()?;
    for trial in data {
        if !fold.train_trials.contains(&trial.key) {
            return Err(TcnError::NotInTrainingSet(trial.key.to_string()));
        }
        if let Some(&label) = trial.labels.iter().find(|&&l| l >= model.num_classes) {
            return Err(TcnError::VocabularyMismatch {
                trial: trial.key.to_string(),
                label,
                classes: model.num_classes,
            });
        }
        if trial.labels.len() != trial.features.length() {
            return Err(TcnError::InvalidConfig(format!(
                "trial {}: {} labels for {} frames",
                trial.key,
                trial.labels.len(),
                trial.features.length()
            )));
        }
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(
        AdamConfig::new(cfg.learning_rate, cfg.weight_decay),
        &model.parameter_shapes(),
    );
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut record = TrainRecord {
        epoch_loss: Vec::with_capacity(cfg.epochs),
        epoch_accuracy: Vec::with_capacity(cfg.epochs),
        wall_clock_seconds: 0.0,
        seed: cfg.seed,
    };
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut frames = 0usize;
        for &i in &order {
            let trial = &data[i];
            let (logits, trace) = model.forward(&trial.features, exec)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &trial.labels, None)?;
            if !loss.is_finite() {
                return Err(TcnError::NonFiniteLoss {
                    epoch,
                    trial: trial.key.to_string(),
                    loss,
                });
            }
            correct += argmax_labels(&logits)
                .iter()
                .zip(&trial.labels)
                .filter(|(p, y)| p == y)
                .count();
            frames += trial.labels.len();
            loss_sum += loss;
            let grads = model.backward(&trace, &grad, exec)?;
            adam.step(model.parameters_mut(), &grads.as_slices())?;
        }
        let mean_loss = if data.is_empty() {
            0.0
        } else {
            loss_sum / data.len() as f64
        };
        let accuracy = if frames == 0 {
            0.0
        } else {
            100.0 * correct as f64 / frames as f64
        };
        debug!("epoch {epoch}: loss {mean_loss:.5} train acc {accuracy:.2}");
        record.epoch_loss.push(mean_loss);
        record.epoch_accuracy.push(accuracy);
    }
    if !model.is_finite() {
        return Err(TcnError::NonFiniteLoss {
            epoch: cfg.epochs,
            trial: "<parameters>".into(),
            loss: f64::NAN,
        });
    }
    record.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok((model, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossval::HeldOut;
    use crate::dataset::{Granularity, Segment, SubjectId, Vocabulary};
    use crate::tcn::CvDefaults;
    use std::collections::BTreeSet;

    fn transcript(segs: &[(usize, usize, &str)], len: usize) -> LabelTranscript {
        LabelTranscript::new(
            Granularity::Gesture,
            Vocabulary::new(["A", "B"]),
            segs.iter().map(|&(s, e, l)| Segment::new(s, e, l)).collect(),
            len,
        )
        .unwrap()
    }

    #[test]
    fn kernel_from_shortest_class() {
        // A: mean 10, B: mean 30
        let t = transcript(&[(0, 9, "A"), (10, 39, "B"), (40, 49, "A")], 50);
        assert_eq!(compute_kernel_size(&[t]).unwrap(), 9);
        let t = transcript(&[(0, 2, "A"), (3, 5, "A")], 6);
        assert_eq!(compute_kernel_size(&[t]).unwrap(), 3);
        let t = transcript(&[(0, 1, "A"), (2, 3, "B")], 4);
        assert_eq!(compute_kernel_size(&[t]).unwrap(), 3);
        assert_eq!(compute_kernel_size(&[]).unwrap_err(), TcnError::EmptyTranscripts);
        // means pooled across transcripts: A = (11 + 13) / 2 = 12 → 11
        let a = transcript(&[(0, 10, "A"), (11, 49, "B")], 50);
        let b = transcript(&[(0, 12, "A"), (13, 49, "B")], 50);
        assert_eq!(compute_kernel_size(&[a, b]).unwrap(), 11);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        let s = Tensor2::from_frames(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2]]).unwrap();
        assert_eq!(argmax_labels(&s), vec![1, 0]);
    }

    fn toy(seed: u64) -> (FoldPlan, Vec<PreparedTrial>, ModelConfig) {
        let trials: Vec<PreparedTrial> = (0..2)
            .map(|i| {
                let labels: Vec<usize> = (0..24).map(|t| (t / 8 + i) % 2).collect();
                let rows = vec![
                    labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect(),
                    labels.iter().map(|&l| l as f64).collect(),
                ];
                PreparedTrial {
                    key: TrialKey::new("S", &format!("s{i}"), "1"),
                    features: Tensor2::from_rows(&rows).unwrap(),
                    labels,
                }
            })
            .collect();
        let fold = FoldPlan {
            name: "toy".into(),
            held_out: HeldOut::Subject(SubjectId::new("X", "none")),
            train_trials: trials.iter().map(|t| t.key.clone()).collect(),
            test_trials: BTreeSet::new(),
        };
        let cfg = ModelConfig {
            filters: vec![4, 4, 4],
            epochs: 3,
            learning_rate: 1e-2,
            ..ModelConfig::new(3, 2, CvDefaults::LOUO, seed)
        };
        (fold, trials, cfg)
    }

    #[test]
    fn zero_epochs_returns_input_model() {
        let (fold, data, mut cfg) = toy(1);
        cfg.epochs = 0;
        let m = TcnModel::build(&cfg, 2).unwrap();
        let (trained, rec) = train_fold(m.clone(), &fold, &data, &cfg, Execution::Sequential).unwrap();
        assert_eq!(trained, m);
        assert!(rec.epoch_loss.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let (fold, data, cfg) = toy(4);
        let m = TcnModel::build(&cfg, 2).unwrap();
        let (a, ra) = train_fold(m.clone(), &fold, &data, &cfg, Execution::Sequential).unwrap();
        let (b, rb) = train_fold(m, &fold, &data, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.epoch_loss, rb.epoch_loss);
        assert!(ra.epoch_loss.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn rejects_foreign_trials_and_labels() {
        let (mut fold, mut data, cfg) = toy(2);
        let m = TcnModel::build(&cfg, 2).unwrap();
        data[0].labels[0] = 5;
        assert!(matches!(
            train_fold(m.clone(), &fold, &data, &cfg, Execution::Sequential),
            Err(TcnError::VocabularyMismatch { label: 5, .. })
        ));
        data[0].labels[0] = 0;
        fold.train_trials.remove(&data[1].key);
        assert!(matches!(
            train_fold(m, &fold, &data, &cfg, Execution::Sequential),
            Err(TcnError::NotInTrainingSet(_))
        ));
    }

    #[test]
    fn scaler_standardizes() {
        let x = Tensor2::from_rows(&[vec![1.0, 3.0], vec![10.0, 10.0]]).unwrap();
        let s = FeatureScaler::fit([&x]).unwrap();
        let mut y = x.clone();
        s.apply(&mut y);
        assert_eq!(y.row(0), &[-1.0, 1.0]);
        assert_eq!(y.row(1), &[0.0, 0.0]);
    }
}
