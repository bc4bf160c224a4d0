//! Separable synthetic kinematics with gesture and motion-primitive labels.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CvMode, ExperimentConfig, Result, RunnerError};
use crate::crossval::TASKS;
use crate::dataset::{dataset_has_gestures, ArmColumns, Granularity, MotionPrimitive, Tool, Verb, ARM_STRIDE};

/// Channels per frame in generated kinematics (two 19-column arm blocks).
pub const SYNTH_CHANNELS: usize = 2 * ARM_STRIDE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub subjects: usize,
    pub trials_per_subject: usize,
    pub tasks: usize,
    pub classes: usize,
    pub min_length: usize,
    pub max_length: usize,
    /// Shortest and longest generated segment, in frames.
    pub min_segment: usize,
    pub max_segment: usize,
    /// Duration range of class 0, which stands in for a brief gesture;
    /// `None` gives every class the `min_segment..=max_segment` range.
    pub brief_class: Option<(usize, usize)>,
    pub seed: u64,
    /// Standard deviation of per-frame noise around a class signature.
    pub noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            subjects: 3,
            trials_per_subject: 2,
            tasks: 1,
            classes: 3,
            min_length: 280,
            max_length: 320,
            min_segment: 25,
            max_segment: 75,
            brief_class: Some((6, 12)),
            seed: 0,
            noise: 0.3,
        }
    }
}

impl SynthOptions {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(RunnerError::Config(m.to_string()));
        if self.subjects == 0 || self.trials_per_subject == 0 || self.tasks == 0 || self.classes == 0 {
            return bad("subject, trial, task, and class counts must be at least 1");
        }
        if self.tasks > TASKS.len() {
            return bad("at most six tasks can be generated");
        }
        if self.min_segment == 0 || self.min_segment > self.max_segment {
            return bad("segment lengths must satisfy 1 <= min_segment <= max_segment");
        }
        if self
            .brief_class
            .is_some_and(|(lo, hi)| lo == 0 || lo > hi || hi > self.max_segment)
        {
            return bad("brief class range must satisfy 1 <= lo <= hi <= max_segment");
        }
        if self.min_length < self.max_segment || self.min_length > self.max_length {
            return bad("trial lengths must satisfy max_segment <= min_length <= max_length");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be a non-negative number");
        }
        Ok(())
    }
}

/// What [`generate_synthetic_dataset`] wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub manifest: PathBuf,
    pub experiment: PathBuf,
    pub trials: usize,
}

/// Source dataset of a task id, following the public task grouping.
pub fn dataset_of(task: &str) -> &'static str {
    match task {
        "S" | "NP" | "KT" => "JIGSAWS",
        "PT" => "DESK",
        _ => "ROSMA",
    }
}

const ACTIVE_VERBS: [Verb; 6] = [
    Verb::Grasp,
    Verb::Release,
    Verb::Touch,
    Verb::Untouch,
    Verb::Pull,
    Verb::Push,
];

/// Verbs performed by the left and right arm during gesture class `k`.
/// The left verb is unique per class for up to six classes; the right arm
/// idles on even classes.
fn arm_verbs(k: usize) -> (Verb, Verb) {
    let left = ACTIVE_VERBS[k % ACTIVE_VERBS.len()];
    let right = if k.is_multiple_of(2) {
        Verb::Idle
    } else {
        ACTIVE_VERBS[(k + 1) % ACTIVE_VERBS.len()]
    };
    (left, right)
}

fn verb_index(v: Verb) -> usize {
    Verb::ALL.iter().position(|x| *x == v).unwrap_or(0)
}

fn tile(
    rng: &mut ChaCha8Rng,
    length: usize,
    classes: usize,
    range: impl Fn(usize) -> (usize, usize),
) -> Vec<(usize, usize, usize)> {
    let shortest = (0..classes).map(|c| range(c).0).min().unwrap_or(1);
    let mut out = Vec::new();
    let mut start = 0;
    let mut prev = usize::MAX;
    while start < length {
        let class = loop {
            let c = rng.gen_range(0..classes);
            if classes == 1 || c != prev {
                break c;
            }
        };
        let (lo, hi) = range(class);
        let mut dur = rng.gen_range(lo..=hi);
        if length - start < dur + shortest {
            dur = length - start;
        }
        out.push((start, start + dur - 1, class));
        prev = class;
        start += dur;
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| RunnerError::io(path, e))
}

fn mp_label(verb: Verb, tool: Tool) -> String {
    MotionPrimitive {
        verb,
        tool,
        object: "Needle".into(),
    }
    .to_string()
}

/// Writes a catalog of noisy, linearly separable trials under `out`:
/// kinematics in the standard two-arm layout, gesture transcripts (for
/// tasks whose dataset has them), two-arm and per-arm MP transcripts, a
/// `manifest.toml`, and a ready-to-run `experiment.toml`.
///
/// Each gesture class has its own left/right verb pair and each verb its
/// own per-arm signature in the position, velocity, and gripper columns.
pub fn generate_synthetic_dataset(opts: &SynthOptions, out: &Path) -> Result<SynthDataset> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.noise).map_err(|e| RunnerError::Config(e.to_string()))?;
    let arms = [ArmColumns::standard(0), ArmColumns::standard(ARM_STRIDE)];
    // signature[arm][verb][feature]
    let signature: Vec<Vec<[f64; 7]>> = (0..2)
        .map(|_| {
            (0..Verb::ALL.len())
                .map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)))
                .collect()
        })
        .collect();

    let tasks = &TASKS[..opts.tasks];
    let gestures: Vec<String> = (1..=opts.classes).map(|k| format!("G{k}")).collect();
    let mut manifest = String::new();
    writeln!(manifest, "[vocabulary]\ngesture = {:?}\n", gestures).ok();
    let mut trials = 0;
    for task in tasks {
        let dataset = dataset_of(task);
        for s in 1..=opts.subjects {
            let subject = format!("U{s:02}");
            let offset: Vec<f64> = (0..SYNTH_CHANNELS).map(|_| rng.gen_range(-0.2..0.2)).collect();
            for n in 1..=opts.trials_per_subject {
                let name = format!("{task}_{subject}_{n:03}");
                let length = rng.gen_range(opts.min_length..=opts.max_length);
                let segments = tile(&mut rng, length, opts.classes, |c| match opts.brief_class {
                    Some(r) if c == 0 && opts.classes > 1 => r,
                    _ => (opts.min_segment, opts.max_segment),
                });

                let mut frame_class = vec![0; length];
                for &(a, b, k) in &segments {
                    frame_class[a..=b].fill(k);
                }
                let mut kin = String::with_capacity(length * SYNTH_CHANNELS * 8);
                let mut row = vec![0.0; SYNTH_CHANNELS];
                for &k in &frame_class {
                    let (l, r) = arm_verbs(k);
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = offset[c] + 0.1 * noise.sample(&mut rng);
                    }
                    for (arm, verb) in [(0, l), (1, r)] {
                        let sig = &signature[arm][verb_index(verb)];
                        let cols: Vec<usize> = arms[arm]
                            .position
                            .iter()
                            .chain(&arms[arm].linear_velocity)
                            .copied()
                            .chain([arms[arm].gripper])
                            .collect();
                        for (j, &c) in cols.iter().enumerate() {
                            row[c] = offset[c] + sig[j] + noise.sample(&mut rng);
                        }
                    }
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:.5}")).collect();
                    kin.push_str(&cells.join(" "));
                    kin.push('\n');
                }

                let mut gesture = String::new();
                let mut mp = String::new();
                let mut left = String::new();
                let mut right = String::new();
                for &(a, b, k) in &segments {
                    writeln!(gesture, "{a} {b} {}", gestures[k]).ok();
                    let (l, r) = arm_verbs(k);
                    writeln!(mp, "{a} {b} {}", mp_label(l, Tool::Left)).ok();
                    writeln!(left, "{a} {b} {}", mp_label(l, Tool::Left)).ok();
                    if r != Verb::Idle {
                        writeln!(mp, "{a} {b} {}", mp_label(r, Tool::Right)).ok();
                        writeln!(right, "{a} {b} {}", mp_label(r, Tool::Right)).ok();
                    }
                }

                let rel = |kind: &str| format!("{task}/{kind}/{name}.txt");
                write(&out.join(rel("kinematics")), &kin)?;
                write(&out.join(rel("mp")), &mp)?;
                write(&out.join(rel("mp-left")), &left)?;
                write(&out.join(rel("mp-right")), &right)?;
                let mut transcripts = vec![
                    format!("mp = {:?}", rel("mp")),
                    format!("mp-left = {:?}", rel("mp-left")),
                    format!("mp-right = {:?}", rel("mp-right")),
                ];
                if dataset_has_gestures(dataset) {
                    write(&out.join(rel("gestures")), &gesture)?;
                    transcripts.insert(0, format!("gesture = {:?}", rel("gestures")));
                }
                writeln!(
                    manifest,
                    "[[trial]]\ndataset = {dataset:?}\ntask = {task:?}\nsubject = {subject:?}\ntrial = {name:?}\nkinematics = {:?}\ntranscripts = {{ {} }}\n",
                    rel("kinematics"),
                    transcripts.join(", ")
                )
                .ok();
                trials += 1;
            }
        }
    }
    let manifest_path = out.join("manifest.toml");
    write(&manifest_path, &manifest)?;

    let granularity = if tasks.iter().all(|t| dataset_has_gestures(dataset_of(t))) {
        Granularity::Gesture
    } else {
        Granularity::Mp
    };
    let mut exp = ExperimentConfig::new("manifest.toml");
    exp.granularity = granularity;
    exp.cv = CvMode::Louo;
    exp.output = Some(PathBuf::from("runs/louo"));
    exp.seed = opts.seed;
    exp.model.learning_rate = Some(SYNTH_LEARNING_RATE);
    let experiment_path = out.join("experiment.toml");
    let text = toml::to_string(&exp).map_err(|e| RunnerError::Config(e.to_string()))?;
    write(&experiment_path, &text)?;
    Ok(SynthDataset {
        manifest: manifest_path,
        experiment: experiment_path,
        trials,
    })
}

/// Learning rate written into the generated experiment config. The LOUO
/// default is sized for folds of dozens of long trials; 60 epochs over a
/// handful of short synthetic trials need a larger step.
pub const SYNTH_LEARNING_RATE: f64 = 3e-4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_catalog, validate_catalog};

    #[test]
    fn tiles_cover_every_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for len in [45, 60, 299, 1000] {
            let segs = tile(&mut rng, len, 3, |c| if c == 0 { (6, 12) } else { (15, 45) });
            assert_eq!(segs[0].0, 0);
            assert_eq!(segs.last().unwrap().1, len - 1);
            for w in segs.windows(2) {
                assert_eq!(w[0].1 + 1, w[1].0);
                assert_ne!(w[0].2, w[1].2);
            }
        }
    }

    #[test]
    fn generated_catalog_validates() {
        let dir = tempfile::tempdir().unwrap();
        let opts = SynthOptions {
            tasks: 6,
            subjects: 2,
            trials_per_subject: 1,
            min_length: 80,
            max_length: 100,
            ..SynthOptions::default()
        };
        let ds = generate_synthetic_dataset(&opts, dir.path()).unwrap();
        assert_eq!(ds.trials, 12);
        let cat = build_catalog(dir.path(), &ds.manifest).unwrap();
        let summary = validate_catalog(&cat).unwrap();
        assert_eq!(summary.total_trials, 12);
        let rosma = summary.tasks.iter().find(|t| t.task == "PaS").unwrap();
        assert!(!rosma.granularities.contains(&Granularity::Gesture));
        assert_eq!(rosma.channels, SYNTH_CHANNELS);
        let cfg = ExperimentConfig::load(&ds.experiment).unwrap();
        assert_eq!(cfg.granularity, Granularity::Mp);
    }
}
