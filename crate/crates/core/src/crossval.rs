//! Leave-one-user-out and leave-one-task-out fold planning.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{dataset_has_gestures, Catalog, CatalogEntry, Granularity, SubjectId, TrialKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrossvalError {
    #[error("unknown task combination {0:?}")]
    UnknownCombo(String),
    #[error("task selection is empty or has no trials")]
    EmptySelection,
    #[error("task {0:?} is not in the catalog")]
    UnknownTask(String),
    #[error("test task {0:?} also appears in the training tasks")]
    TaskOverlap(String),
    #[error("catalog is missing task {0:?}")]
    MissingTask(String),
    #[error("gesture labels cannot be shared across datasets ({test} vs {train})")]
    CrossDatasetGesture { test: String, train: String },
    #[error("task {0:?} has no gesture labels")]
    NoGestureLabels(String),
    #[error("fold plan i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, CrossvalError>;

/// The six task ids, in reporting order.
pub const TASKS: [&str; 6] = ["S", "NP", "KT", "PT", "PaS", "PoaP"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum HeldOut {
    Subject(SubjectId),
    Task(String),
}

/// One fold: disjoint train and test trial sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub name: String,
    pub held_out: HeldOut,
    pub train_trials: BTreeSet<TrialKey>,
    pub test_trials: BTreeSet<TrialKey>,
}

impl FoldPlan {
    pub fn train_tasks(&self) -> BTreeSet<&str> {
        self.train_trials.iter().map(|k| k.task.as_str()).collect()
    }

    pub fn test_tasks(&self) -> BTreeSet<&str> {
        self.test_trials.iter().map(|k| k.task.as_str()).collect()
    }
}

/// Named task union used as a training set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCombo {
    pub name: String,
    pub tasks: BTreeSet<String>,
}

fn set(tasks: &[&str]) -> BTreeSet<String> {
    tasks.iter().map(|t| t.to_string()).collect()
}

/// Resolves a registry name (single tasks, `SNP`, `PTPaS`, `JIGSAWS`,
/// `ROSMA`, `All`) to its task set.
pub fn resolve_task_combo(name: &str) -> Result<BTreeSet<String>> {
    if let Some(t) = TASKS.iter().find(|t| **t == name) {
        return Ok(set(&[t]));
    }
    let tasks = match name {
        "SNP" => set(&["S", "NP"]),
        "PTPaS" => set(&["PT", "PaS"]),
        "JIGSAWS" => set(&["S", "NP", "KT"]),
        "ROSMA" => set(&["PaS", "PoaP"]),
        "All" => set(&TASKS),
        _ => return Err(CrossvalError::UnknownCombo(name.to_string())),
    };
    Ok(tasks)
}

/// Canonical combination name for a task set, or the `+`-joined task list.
pub fn combo_name(tasks: &BTreeSet<String>) -> String {
    for name in TASKS.iter().copied().chain(["SNP", "PTPaS", "JIGSAWS", "ROSMA", "All"]) {
        if resolve_task_combo(name).as_ref() == Ok(tasks) {
            return name.to_string();
        }
    }
    let mut ordered: Vec<&str> = tasks.iter().map(String::as_str).collect();
    ordered.sort_by_key(|t| TASKS.iter().position(|x| x == t).unwrap_or(usize::MAX));
    ordered.join("+")
}

/// One fold per subject in the selected tasks; the subject's trials form the
/// test set and every other selected trial the training set.
pub fn louo_folds(catalog: &Catalog, tasks: &BTreeSet<String>) -> Result<Vec<FoldPlan>> {
    if tasks.is_empty() {
        return Err(CrossvalError::EmptySelection);
    }
    if let Some(t) = tasks.iter().find(|t| !catalog.has_task(t)) {
        return Err(CrossvalError::UnknownTask(t.clone()));
    }
    let selected: Vec<_> = catalog.entries_for_tasks(tasks).collect();
    if selected.is_empty() {
        return Err(CrossvalError::EmptySelection);
    }
    let subjects: BTreeSet<SubjectId> = selected.iter().map(|e| e.subject_id()).collect();
    Ok(subjects
        .into_iter()
        .map(|subject| {
            let (test, train): (Vec<&&CatalogEntry>, Vec<&&CatalogEntry>) =
                selected.iter().partition(|e| e.subject_id() == subject);
            FoldPlan {
                name: format!("louo-{}", subject.0.replace('/', "-")),
                held_out: HeldOut::Subject(subject),
                train_trials: train.into_iter().map(|e| e.key.clone()).collect(),
                test_trials: test.into_iter().map(|e| e.key.clone()).collect(),
            }
        })
        .collect())
}

/// Holds out every trial of `test_task` and trains on every trial of
/// `train_tasks`. Gesture plans must stay within one source dataset.
pub fn loto_folds(
    catalog: &Catalog,
    test_task: &str,
    train_tasks: &BTreeSet<String>,
    granularity: Granularity,
) -> Result<FoldPlan> {
    if train_tasks.is_empty() {
        return Err(CrossvalError::EmptySelection);
    }
    if train_tasks.contains(test_task) {
        return Err(CrossvalError::TaskOverlap(test_task.to_string()));
    }
    for t in std::iter::once(test_task).chain(train_tasks.iter().map(String::as_str)) {
        if !catalog.has_task(t) {
            return Err(CrossvalError::UnknownTask(t.to_string()));
        }
    }
    if granularity == Granularity::Gesture {
        let test_ds = catalog.dataset_of_task(test_task).unwrap_or_default();
        if !dataset_has_gestures(test_ds) {
            return Err(CrossvalError::NoGestureLabels(test_task.to_string()));
        }
        for t in train_tasks {
            let ds = catalog.dataset_of_task(t).unwrap_or_default();
            if ds != test_ds {
                return Err(CrossvalError::CrossDatasetGesture {
                    test: format!("{test_task} ({test_ds})"),
                    train: format!("{t} ({ds})"),
                });
            }
        }
    }
    let keys = |pred: &dyn Fn(&str) -> bool| -> BTreeSet<TrialKey> {
        catalog
            .entries()
            .iter()
            .filter(|e| pred(&e.key.task))
            .map(|e| e.key.clone())
            .collect()
    };
    Ok(FoldPlan {
        name: format!("loto-{}-from-{}", test_task, combo_name(train_tasks)),
        held_out: HeldOut::Task(test_task.to_string()),
        train_trials: keys(&|t| train_tasks.contains(t)),
        test_trials: keys(&|t| t == test_task),
    })
}

/// Train/test task combinations of the leave-one-task-out study: for every
/// test task, all other tasks, all others minus the contextually similar
/// task, and the within-dataset and similar-task-only combinations.
pub const LOTO_SUITE: [(&str, &[&str]); 22] = [
    ("S", &["NP", "KT", "PT", "PaS", "PoaP"]),
    ("S", &["KT", "PT", "PaS", "PoaP"]),
    ("S", &["NP", "KT"]),
    ("S", &["NP"]),
    ("NP", &["S", "KT", "PT", "PaS", "PoaP"]),
    ("NP", &["KT", "PT", "PaS", "PoaP"]),
    ("NP", &["S", "KT"]),
    ("NP", &["S"]),
    ("KT", &["S", "NP", "PT", "PaS", "PoaP"]),
    ("KT", &["PT", "PaS", "PoaP"]),
    ("KT", &["S", "NP"]),
    ("PT", &["S", "NP", "KT", "PaS", "PoaP"]),
    ("PT", &["S", "NP", "KT", "PoaP"]),
    ("PT", &["PaS"]),
    ("PaS", &["S", "NP", "KT", "PT", "PoaP"]),
    ("PaS", &["S", "NP", "KT", "PoaP"]),
    ("PaS", &["PT", "PoaP"]),
    ("PaS", &["PT"]),
    ("PaS", &["PoaP"]),
    ("PoaP", &["S", "NP", "KT", "PT", "PaS"]),
    ("PoaP", &["S", "NP", "KT", "PT"]),
    ("PoaP", &["PaS"]),
];

/// Every plan of [`LOTO_SUITE`]. At gesture granularity only the
/// single-dataset combinations are emitted.
pub fn loto_suite(catalog: &Catalog, granularity: Granularity) -> Result<Vec<FoldPlan>> {
    if let Some(t) = TASKS.iter().find(|t| !catalog.has_task(t)) {
        return Err(CrossvalError::MissingTask(t.to_string()));
    }
    let mut plans = Vec::new();
    for (test, train) in LOTO_SUITE {
        match loto_folds(catalog, test, &set(train), granularity) {
            Ok(p) => plans.push(p),
            Err(CrossvalError::CrossDatasetGesture { .. } | CrossvalError::NoGestureLabels(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(plans)
}

/// Checks the leakage invariants of a plan against the catalog.
pub fn check_plan(catalog: &Catalog, plan: &FoldPlan) -> std::result::Result<(), String> {
    if let Some(k) = plan.train_trials.intersection(&plan.test_trials).next() {
        return Err(format!("{}: trial {k} in both train and test", plan.name));
    }
    let subject = |k: &TrialKey| catalog.entry(k).map(|e| e.subject_id());
    match &plan.held_out {
        HeldOut::Subject(s) => {
            if plan.test_trials.iter().any(|k| subject(k).as_ref() != Some(s)) {
                return Err(format!("{}: test set contains another subject", plan.name));
            }
            if plan.train_trials.iter().any(|k| subject(k).as_ref() == Some(s)) {
                return Err(format!("{}: held-out subject {s} in training", plan.name));
            }
        }
        HeldOut::Task(t) => {
            if plan.train_trials.iter().any(|k| &k.task == t) {
                return Err(format!("{}: held-out task {t} in training", plan.name));
            }
            let expected: BTreeSet<&TrialKey> = catalog
                .entries()
                .iter()
                .filter(|e| &e.key.task == t)
                .map(|e| &e.key)
                .collect();
            if plan.test_trials.iter().collect::<BTreeSet<_>>() != expected {
                return Err(format!("{}: test set is not every trial of {t}", plan.name));
            }
        }
    }
    Ok(())
}

pub fn save_plans(path: &Path, plans: &[FoldPlan]) -> Result<()> {
    let json = serde_json::to_string_pretty(plans).map_err(|e| CrossvalError::Io(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| CrossvalError::Io(format!("{}: {e}", path.display())))
}

pub fn load_plans(path: &Path) -> Result<Vec<FoldPlan>> {
    let text = std::fs::read_to_string(path).map_err(|e| CrossvalError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CrossvalError::Io(e.to_string()))
}
