use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{combine_classes, CvMode, ExperimentConfig, Result, RunnerError};
use crate::crossval::{check_plan, combo_name, loto_folds, loto_suite, louo_folds, FoldPlan, HeldOut, TASKS};
use crate::dataset::{
    build_catalog, select_features, Catalog, FeatureSpec, Granularity, LabelTranscript, TrialKey, Vocabulary, IDLE,
};
use crate::metrics::{evaluate, summarize, ClassAp, MetricsReport, TrialPrediction};
use crate::nn::Tensor2;
use crate::par;
use crate::tcn::{
    compute_kernel_size, predict_labels, train_fold, Checkpoint, FeatureScaler, ModelConfig, PreparedTrial, TcnError,
    TcnModel,
};

/// Which side of a fold a trial was read for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

/// One trial read from disk on behalf of a fold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Access {
    pub fold: String,
    pub phase: Phase,
    pub key: TrialKey,
}

/// Features, dense labels, and transcript of a trial, cropped to its
/// labeled span for gestures.
#[derive(Debug, Clone)]
struct LoadedTrial {
    key: TrialKey,
    features: Tensor2,
    labels: Vec<usize>,
    transcript: LabelTranscript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FoldStatus {
    Completed,
    /// Training produced a non-finite loss; the fold has no metrics.
    Diverged {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub name: String,
    pub held_out: HeldOut,
    pub train_tasks: Vec<String>,
    pub test_tasks: Vec<String>,
    pub train_trials: usize,
    pub test_trials: usize,
    /// Trials shorter than the network's minimum input length.
    pub skipped_trials: Vec<String>,
    /// Resolved settings, including the derived kernel size and fold seed.
    pub model: ModelConfig,
    pub status: FoldStatus,
    pub epoch_loss: Vec<f64>,
    pub metrics: Option<MetricsReport>,
}

/// Wall-clock figures, kept apart from the deterministic payload.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub fold_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    /// Row label used in summary tables, e.g. `S` or `PT <- S+NP+KT`.
    pub label: String,
    pub class_labels: Vec<String>,
    pub folds: Vec<FoldReport>,
    /// Means over completed folds of the per-fold trial means.
    pub mean_accuracy: Option<f64>,
    pub mean_edit: Option<f64>,
    /// Per-class AP averaged over the folds where it is defined, supports
    /// summed over folds.
    pub classes: Vec<ClassAp>,
    pub macro_map: Option<f64>,
    pub micro_map: Option<f64>,
    pub timing: Timing,
}

impl ExperimentReport {
    /// JSON of everything that must be reproducible from config and seed:
    /// the report minus timing, output location, and thread settings.
    pub fn payload_json(&self) -> String {
        let mut value = serde_json::to_value(self).unwrap_or_default();
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timing");
            if let Some(cfg) = obj.get_mut("config").and_then(|c| c.as_object_mut()) {
                for k in ["output", "workers", "execution", "catalog"] {
                    cfg.remove(k);
                }
            }
        }
        serde_json::to_string_pretty(&value).unwrap_or_default()
    }

    pub fn completed_folds(&self) -> impl Iterator<Item = (&FoldReport, &MetricsReport)> {
        self.folds.iter().filter_map(|f| f.metrics.as_ref().map(|m| (f, m)))
    }

    /// Checks that the stored means equal the means of the fold values.
    pub fn check_means(&self) -> std::result::Result<(), String> {
        let (acc, edit) = fold_means(&self.folds);
        for (name, stored, recomputed) in [("accuracy", self.mean_accuracy, acc), ("edit", self.mean_edit, edit)] {
            match (stored, recomputed) {
                (Some(a), Some(b)) if (a - b).abs() <= 1e-9 => {}
                (None, None) => {}
                _ => return Err(format!("stored mean {name} {stored:?} != recomputed {recomputed:?}")),
            }
        }
        Ok(())
    }
}

fn fold_means(folds: &[FoldReport]) -> (Option<f64>, Option<f64>) {
    let done: Vec<&MetricsReport> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
    if done.is_empty() {
        return (None, None);
    }
    let n = done.len() as f64;
    (
        Some(done.iter().map(|m| m.mean_accuracy).sum::<f64>() / n),
        Some(done.iter().map(|m| m.mean_edit).sum::<f64>() / n),
    )
}

/// Per-fold seed: the first eight bytes of SHA-256 over the experiment
/// seed and the fold name.
pub fn fold_seed(seed: u64, fold: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(fold.as_bytes())
        .finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

/// Result of training one fold.
pub struct FoldOutcome {
    pub report: FoldReport,
    /// `None` when the fold diverged.
    pub checkpoint: Option<Checkpoint>,
}

/// A resolved experiment: catalog loaded, folds planned.
pub struct Experiment {
    config: ExperimentConfig,
    catalog: Catalog,
    vocabulary: Vocabulary,
    features: FeatureSpec,
    plans: Vec<FoldPlan>,
    label: String,
    log: Mutex<Vec<Access>>,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let root = config.catalog.parent().unwrap_or(Path::new("."));
        let catalog = build_catalog(root, &config.catalog)?;
        Experiment::with_catalog(config, catalog)
    }

    pub fn with_catalog(config: ExperimentConfig, catalog: Catalog) -> Result<Self> {
        config.validate()?;
        let g = config.granularity;
        let (plans, label) = match config.cv {
            CvMode::Louo => {
                let tasks = config.louo_tasks(&catalog)?;
                (louo_folds(&catalog, &tasks)?, combo_name(&tasks))
            }
            CvMode::Loto => {
                let test = config.test_task.clone().unwrap_or_default();
                let train = super::config::expand_tasks(&config.train_tasks)?;
                let label = format!("{test} <- {}", combo_name(&train));
                (vec![loto_folds(&catalog, &test, &train, g)?], label)
            }
            CvMode::LotoSuite => (loto_suite(&catalog, g)?, "LOTO suite".to_string()),
        };
        for p in &plans {
            check_plan(&catalog, p).map_err(RunnerError::Config)?;
            let missing = p
                .train_trials
                .iter()
                .chain(&p.test_trials)
                .filter(|k| catalog.entry(k).is_some_and(|e| !e.has_granularity(g)))
                .count();
            if missing > 0 {
                warn!("{}: {missing} trial(s) lack {g} labels and are excluded", p.name);
            }
        }
        let plans: Vec<FoldPlan> = plans
            .into_iter()
            .map(|mut p| {
                let usable = |k: &TrialKey| catalog.entry(k).is_some_and(|e| e.has_granularity(g));
                p.train_trials.retain(usable);
                p.test_trials.retain(usable);
                p
            })
            .filter(|p| {
                let keep = !p.train_trials.is_empty() && !p.test_trials.is_empty();
                if !keep {
                    warn!("{}: no usable {g} trials on one side; fold dropped", p.name);
                }
                keep
            })
            .collect();
        if plans.is_empty() {
            return Err(RunnerError::Config(format!("no fold has usable {g} trials")));
        }
        let vocabulary = catalog.vocabulary(g)?;
        if vocabulary.is_empty() {
            return Err(RunnerError::Config(format!("empty {g} vocabulary")));
        }
        let features = config.feature_spec();
        Ok(Experiment {
            config,
            catalog,
            vocabulary,
            features,
            plans,
            label,
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn plans(&self) -> &[FoldPlan] {
        &self.plans
    }

    pub fn plan(&self, name: &str) -> Option<&FoldPlan> {
        self.plans.iter().find(|p| p.name == name)
    }

    /// Every trial read so far, in the order the reads happened.
    pub fn access_log(&self) -> Vec<Access> {
        self.log.lock().map(|l| l.clone()).unwrap_or_default()
    }

    fn load(&self, fold: &str, phase: Phase, key: &TrialKey) -> Result<LoadedTrial> {
        if let Ok(mut log) = self.log.lock() {
            log.push(Access {
                fold: fold.to_string(),
                phase,
                key: key.clone(),
            });
        }
        let entry = self
            .catalog
            .entry(key)
            .ok_or_else(|| RunnerError::Config(format!("trial {key} is not in the catalog")))?;
        let kin = entry.load_kinematics()?;
        let features = select_features(&kin, &self.features)?;
        let g = self.config.granularity;
        let transcript = entry.load_transcript(g, &self.vocabulary, kin.frames())?;
        if g == Granularity::Gesture {
            let (start, end) = transcript
                .labeled_span()
                .ok_or_else(|| RunnerError::Config(format!("trial {key} has an empty gesture transcript")))?;
            let transcript = transcript.crop(start, end)?;
            let labels = transcript.dense_classes(None)?;
            Ok(LoadedTrial {
                key: key.clone(),
                features: features.slice_frames(start, end + 1),
                labels,
                transcript,
            })
        } else {
            let labels = transcript.dense_classes(Some(IDLE))?;
            Ok(LoadedTrial {
                key: key.clone(),
                features,
                labels,
                transcript,
            })
        }
    }

    /// Trains and scores one fold. Test trials are read only after
    /// training has finished.
    pub fn run_fold(&self, plan: &FoldPlan) -> Result<FoldOutcome> {
        let wrap = |e: RunnerError| RunnerError::Fold {
            fold: plan.name.clone(),
            source: Box::new(e),
        };
        self.run_fold_inner(plan).map_err(wrap)
    }

    fn run_fold_inner(&self, plan: &FoldPlan) -> Result<FoldOutcome> {
        let train: Vec<LoadedTrial> = plan
            .train_trials
            .iter()
            .map(|k| self.load(&plan.name, Phase::Train, k))
            .collect::<Result<_>>()?;
        let transcripts: Vec<LabelTranscript> = train.iter().map(|t| t.transcript.clone()).collect();
        let kernel = match self.config.model.kernel_size {
            Some(k) => k,
            None => compute_kernel_size(&transcripts)?,
        };
        let seed = fold_seed(self.config.seed, &plan.name);
        let cfg = self.config.model_config(kernel, self.vocabulary.len(), seed);
        cfg.validate()?;
        let min_len = cfg.min_length();
        let mut skipped = Vec::new();
        let train: Vec<LoadedTrial> = train
            .into_iter()
            .filter(|t| {
                let ok = t.labels.len() >= min_len;
                if !ok {
                    warn!(
                        "{}: {} has {} frames (< {min_len}); skipped",
                        plan.name,
                        t.key,
                        t.labels.len()
                    );
                    skipped.push(t.key.to_string());
                }
                ok
            })
            .collect();
        if train.is_empty() {
            return Err(TcnError::SequenceTooShort {
                length: 0,
                minimum: min_len,
            }
            .into());
        }
        let scaler = if self.config.standardize {
            FeatureScaler::fit(train.iter().map(|t| &t.features))
        } else {
            None
        };
        let prepared: Vec<PreparedTrial> = train
            .into_iter()
            .map(|t| {
                let mut features = t.features;
                if let Some(s) = &scaler {
                    s.apply(&mut features);
                }
                PreparedTrial {
                    key: t.key,
                    features,
                    labels: t.labels,
                }
            })
            .collect();
        let exec = self.config.execution;
        let model = TcnModel::build(&cfg, self.features.width())?;
        info!("{}: training on {} trials, kernel {kernel}", plan.name, prepared.len());
        let mut report = FoldReport {
            name: plan.name.clone(),
            held_out: plan.held_out.clone(),
            train_tasks: ordered_tasks(plan.train_tasks()),
            test_tasks: ordered_tasks(plan.test_tasks()),
            train_trials: plan.train_trials.len(),
            test_trials: plan.test_trials.len(),
            skipped_trials: Vec::new(),
            model: cfg.clone(),
            status: FoldStatus::Completed,
            epoch_loss: Vec::new(),
            metrics: None,
        };
        let (model, record) = match train_fold(model, plan, &prepared, &cfg, exec) {
            Ok(r) => r,
            Err(e @ TcnError::NonFiniteLoss { .. }) => {
                warn!("{}: {e}; fold skipped", plan.name);
                report.skipped_trials = skipped;
                report.status = FoldStatus::Diverged { message: e.to_string() };
                return Ok(FoldOutcome {
                    report,
                    checkpoint: None,
                });
            }
            Err(e) => return Err(e.into()),
        };
        drop(prepared);
        report.epoch_loss = record.epoch_loss;

        let mut predictions = Vec::new();
        for key in &plan.test_trials {
            let t = self.load(&plan.name, Phase::Test, key)?;
            if t.labels.len() < min_len {
                warn!(
                    "{}: test trial {key} has {} frames (< {min_len}); skipped",
                    plan.name,
                    t.labels.len()
                );
                skipped.push(key.to_string());
                continue;
            }
            let mut features = t.features;
            if let Some(s) = &scaler {
                s.apply(&mut features);
            }
            let (predicted, scores) = predict_labels(&model, &features, exec)?;
            predictions.push(TrialPrediction {
                name: key.to_string(),
                predicted,
                truth: t.labels,
                scores: scores.into_vec(),
            });
        }
        report.skipped_trials = skipped;
        if !predictions.is_empty() {
            report.metrics = Some(evaluate(&predictions, self.vocabulary.labels())?);
        }
        let checkpoint = Checkpoint::new(
            model,
            self.config.granularity,
            self.vocabulary.labels().to_vec(),
            self.features.clone(),
            scaler,
        );
        Ok(FoldOutcome {
            report,
            checkpoint: Some(checkpoint),
        })
    }

    /// Runs every fold, up to `config.workers` at once, then aggregates.
    /// With an output directory, the resolved config and fold plans are
    /// written first and each fold report as soon as it finishes.
    pub fn run(&self) -> Result<ExperimentReport> {
        let started = Instant::now();
        let out = self.config.output.clone();
        if let Some(dir) = &out {
            super::report::write_json(&dir.join("config.json"), &self.config)?;
            super::report::write_json(&dir.join("folds.json"), &self.plans)?;
        }
        let results: Vec<Result<(FoldReport, f64)>> = par::with_workers(self.config.workers, || {
            par::map(crate::Execution::Parallel, &self.plans, |plan| {
                let t0 = Instant::now();
                let outcome = self.run_fold(plan)?;
                if let Some(dir) = &out {
                    super::report::write_json(&dir.join("folds").join(format!("{}.json", plan.name)), &outcome.report)?;
                }
                Ok((outcome.report, t0.elapsed().as_secs_f64()))
            })
        });
        let mut folds = Vec::with_capacity(results.len());
        let mut timing = Timing::default();
        for r in results {
            let (report, secs) = r?;
            timing.fold_seconds.insert(report.name.clone(), secs);
            folds.push(report);
        }
        let (mean_accuracy, mean_edit) = fold_means(&folds);
        let classes = combine_classes(
            folds
                .iter()
                .filter_map(|f| f.metrics.as_ref())
                .map(|m| m.classes.as_slice()),
        );
        let (macro_map, micro_map) = summarize(&classes);
        timing.total_seconds = started.elapsed().as_secs_f64();
        let report = ExperimentReport {
            version: crate::VERSION.to_string(),
            config: self.config.clone(),
            label: self.label.clone(),
            class_labels: self.vocabulary.labels().to_vec(),
            folds,
            mean_accuracy,
            mean_edit,
            classes,
            macro_map,
            micro_map,
            timing,
        };
        if let Some(dir) = &out {
            super::report::emit_report(&report, dir)?;
        }
        Ok(report)
    }
}

fn ordered_tasks(tasks: BTreeSet<&str>) -> Vec<String> {
    let mut v: Vec<String> = tasks.into_iter().map(String::from).collect();
    v.sort_by_key(|t| TASKS.iter().position(|x| x == t).unwrap_or(usize::MAX));
    v
}

/// Loads the catalog, plans folds, trains and scores each, and writes the
/// report when the config names an output directory.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentReport> {
    Experiment::prepare(config)?.run()
}
