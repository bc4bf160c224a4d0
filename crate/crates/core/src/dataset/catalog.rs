use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::transcript::{load_transcript, split_by_arm, Granularity, LabelTranscript, Vocabulary};
use super::trial::{load_trial_kinematics, KinematicTrial};
use super::{read_text, DatasetError, Result};

/// `(task, subject, trial)`; unique within a catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialKey {
    pub task: String,
    pub subject: String,
    pub trial: String,
}

impl TrialKey {
    pub fn new(task: &str, subject: &str, trial: &str) -> Self {
        TrialKey {
            task: task.to_string(),
            subject: subject.to_string(),
            trial: trial.to_string(),
        }
    }
}

impl fmt::Display for TrialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.task, self.subject, self.trial)
    }
}

/// Subject identity namespaced by source dataset: subjects of different
/// datasets are always distinct people.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubjectId(pub String);

impl SubjectId {
    pub fn new(dataset: &str, subject: &str) -> Self {
        SubjectId(format!("{dataset}/{subject}"))
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub dataset: String,
    pub key: TrialKey,
    pub kinematics: PathBuf,
    #[serde(default)]
    pub transcripts: BTreeMap<Granularity, PathBuf>,
}

impl CatalogEntry {
    pub fn subject_id(&self) -> SubjectId {
        SubjectId::new(&self.dataset, &self.key.subject)
    }

    /// Whether labels of `granularity` can be produced for this trial;
    /// per-arm transcripts can be derived from the two-arm one.
    pub fn has_granularity(&self, granularity: Granularity) -> bool {
        self.transcripts.contains_key(&granularity)
            || (granularity.is_single_arm() && self.transcripts.contains_key(&Granularity::Mp))
    }

    pub fn load_kinematics(&self) -> Result<KinematicTrial> {
        Ok(load_trial_kinematics(&self.kinematics, None)?.with_identity(
            &self.key.task,
            &self.key.subject,
            &self.key.trial,
        ))
    }

    /// Loads the transcript at `granularity`, deriving per-arm transcripts
    /// from the two-arm one when no per-arm file is declared.
    pub fn load_transcript(
        &self,
        granularity: Granularity,
        vocabulary: &Vocabulary,
        length: usize,
    ) -> Result<LabelTranscript> {
        if let Some(path) = self.transcripts.get(&granularity) {
            return load_transcript(path, granularity, vocabulary, length);
        }
        let unavailable = || DatasetError::GranularityUnavailable {
            key: self.key.to_string(),
            granularity: granularity.to_string(),
        };
        if !granularity.is_single_arm() {
            return Err(unavailable());
        }
        let mp_path = self.transcripts.get(&Granularity::Mp).ok_or_else(unavailable)?;
        let both = load_transcript(mp_path, Granularity::Mp, &Vocabulary::verbs(), length)?;
        let (left, right) = split_by_arm(&both, length)?;
        Ok(if granularity == Granularity::MpLeft {
            left
        } else {
            right
        })
    }
}

/// The set of trials available to experiments, sorted by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    root: PathBuf,
    gesture_vocabulary: Option<Vec<String>>,
    entries: Vec<CatalogEntry>,
}

/// Datasets that carry no gesture annotations.
const GESTURELESS_DATASETS: [&str; 1] = ["ROSMA"];

/// False for source datasets that were never annotated with gestures.
pub fn dataset_has_gestures(dataset: &str) -> bool {
    !GESTURELESS_DATASETS.iter().any(|d| d.eq_ignore_ascii_case(dataset))
}

impl Catalog {
    pub fn new(root: PathBuf, gesture_vocabulary: Option<Vec<String>>, mut entries: Vec<CatalogEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        for pair in entries.windows(2) {
            if pair[0].key == pair[1].key {
                return Err(DatasetError::DuplicateTrialKey(pair[0].key.to_string()));
            }
        }
        for e in &entries {
            if !dataset_has_gestures(&e.dataset) && e.transcripts.contains_key(&Granularity::Gesture) {
                return Err(DatasetError::GestureUnavailable(e.key.to_string()));
            }
        }
        Ok(Catalog {
            root,
            gesture_vocabulary,
            entries,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, key: &TrialKey) -> Option<&CatalogEntry> {
        self.entries
            .binary_search_by(|e| e.key.cmp(key))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn tasks(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.key.task.clone()).collect()
    }

    pub fn has_task(&self, task: &str) -> bool {
        self.entries.iter().any(|e| e.key.task == task)
    }

    /// Source dataset of `task` (first entry wins).
    pub fn dataset_of_task(&self, task: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.key.task == task)
            .map(|e| e.dataset.as_str())
    }

    pub fn entries_for_tasks<'a>(&'a self, tasks: &'a BTreeSet<String>) -> impl Iterator<Item = &'a CatalogEntry> + 'a {
        self.entries.iter().filter(move |e| tasks.contains(&e.key.task))
    }

    pub fn subjects(&self, tasks: &BTreeSet<String>) -> BTreeSet<SubjectId> {
        self.entries_for_tasks(tasks).map(CatalogEntry::subject_id).collect()
    }

    /// Declared gesture vocabulary, or the sorted union of labels found in
    /// the gesture transcripts.
    pub fn gesture_vocabulary(&self) -> Result<Vec<String>> {
        if let Some(v) = &self.gesture_vocabulary {
            return Ok(v.clone());
        }
        let mut labels = BTreeSet::new();
        for e in &self.entries {
            if let Some(path) = e.transcripts.get(&Granularity::Gesture) {
                for line in read_text(path)?.lines() {
                    let label = line.split_whitespace().skip(2).collect::<Vec<_>>().join(" ");
                    if !label.is_empty() && !line.trim_start().starts_with('#') {
                        labels.insert(label);
                    }
                }
            }
        }
        let mut labels: Vec<String> = labels.into_iter().collect();
        labels.sort_by_key(|l| natural_key(l));
        Ok(labels)
    }

    pub fn vocabulary(&self, granularity: Granularity) -> Result<Vocabulary> {
        if granularity.is_motion_primitive() {
            Ok(Vocabulary::verbs())
        } else {
            Ok(Vocabulary::new(self.gesture_vocabulary()?))
        }
    }
}

fn natural_key(label: &str) -> (String, u64, String) {
    let digits_at = label.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (prefix, digits) = label.split_at(digits_at);
    (prefix.to_string(), digits.parse().unwrap_or(0), label.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    vocabulary: ManifestVocabulary,
    #[serde(default, rename = "trial")]
    trials: Vec<ManifestTrial>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestVocabulary {
    gesture: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestTrial {
    dataset: String,
    task: String,
    subject: String,
    trial: String,
    kinematics: PathBuf,
    #[serde(default)]
    transcripts: BTreeMap<Granularity, PathBuf>,
}

/// Reads a TOML manifest and checks that every declared file exists.
/// Relative paths resolve against `root`.
///
/// ```toml
/// [vocabulary]
/// gesture = ["G1", "G2", "G3"]
///
/// [[trial]]
/// dataset = "JIGSAWS"
/// task = "S"
/// subject = "B"
/// trial = "S_B001"
/// kinematics = "S/kinematics/S_B001.txt"
/// transcripts = { gesture = "S/gestures/S_B001.txt", mp = "S/mp/S_B001.txt" }
/// ```
pub fn build_catalog(root: &Path, manifest: &Path) -> Result<Catalog> {
    let text = read_text(manifest)?;
    let parsed: Manifest = toml::from_str(&text).map_err(|e| DatasetError::Manifest(e.to_string()))?;
    let mut entries = Vec::with_capacity(parsed.trials.len());
    for t in parsed.trials {
        let key = TrialKey::new(&t.task, &t.subject, &t.trial);
        let kinematics = root.join(&t.kinematics);
        if !kinematics.is_file() {
            return Err(DatasetError::MissingFile(kinematics));
        }
        let mut transcripts = BTreeMap::new();
        for (g, p) in t.transcripts {
            let path = root.join(p);
            if !path.is_file() {
                return Err(DatasetError::MissingTranscript {
                    key: key.to_string(),
                    granularity: g.to_string(),
                    path,
                });
            }
            transcripts.insert(g, path);
        }
        entries.push(CatalogEntry {
            dataset: t.dataset,
            key,
            kinematics,
            transcripts,
        });
    }
    Catalog::new(root.to_path_buf(), parsed.vocabulary.gesture, entries)
}

/// Per-task counts produced by [`validate_catalog`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub dataset: String,
    pub trials: usize,
    pub subjects: usize,
    pub channels: usize,
    pub frames: usize,
    pub granularities: Vec<Granularity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub tasks: Vec<TaskSummary>,
    pub total_subjects: usize,
    pub total_trials: usize,
}

/// Loads every trial and transcript, checking formats, label vocabularies,
/// transcript bounds, and per-task channel consistency.
pub fn validate_catalog(catalog: &Catalog) -> Result<ValidationSummary> {
    let mut vocabularies = BTreeMap::new();
    for g in Granularity::ALL {
        if catalog.entries.iter().any(|e| e.has_granularity(g)) {
            vocabularies.insert(g, catalog.vocabulary(g)?);
        }
    }
    let mut tasks: BTreeMap<String, TaskSummary> = BTreeMap::new();
    let mut subjects: BTreeMap<String, BTreeSet<SubjectId>> = BTreeMap::new();
    for e in &catalog.entries {
        let trial = e.load_kinematics()?;
        for (g, vocab) in &vocabularies {
            if e.has_granularity(*g) {
                e.load_transcript(*g, vocab, trial.frames())?;
            }
        }
        let summary = tasks.entry(e.key.task.clone()).or_insert_with(|| TaskSummary {
            task: e.key.task.clone(),
            dataset: e.dataset.clone(),
            trials: 0,
            subjects: 0,
            channels: trial.channels(),
            frames: 0,
            granularities: Granularity::ALL.into_iter().filter(|g| e.has_granularity(*g)).collect(),
        });
        if summary.channels != trial.channels() {
            return Err(DatasetError::InconsistentChannels {
                task: e.key.task.clone(),
                first: summary.channels,
                other: trial.channels(),
            });
        }
        summary.granularities.retain(|g| e.has_granularity(*g));
        summary.trials += 1;
        summary.frames += trial.frames();
        subjects.entry(e.key.task.clone()).or_default().insert(e.subject_id());
    }
    for (task, s) in &subjects {
        if let Some(t) = tasks.get_mut(task) {
            t.subjects = s.len();
        }
    }
    let all = catalog.tasks();
    Ok(ValidationSummary {
        total_subjects: catalog.subjects(&all).len(),
        total_trials: catalog.len(),
        tasks: tasks.into_values().collect(),
    })
}
