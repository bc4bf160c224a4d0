use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Result, RunnerError};
use crate::crossval::resolve_task_combo;
use crate::dataset::{dataset_has_gestures, ArmSelection, Catalog, FeatureSpec, Granularity};
use crate::par::Execution;
use crate::tcn::{CvDefaults, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvMode {
    #[default]
    Louo,
    Loto,
    LotoSuite,
}

impl CvMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CvMode::Louo => "louo",
            CvMode::Loto => "loto",
            CvMode::LotoSuite => "loto-suite",
        }
    }

    pub fn defaults(self) -> CvDefaults {
        match self {
            CvMode::Louo => CvDefaults::LOUO,
            CvMode::Loto | CvMode::LotoSuite => CvDefaults::LOTO,
        }
    }
}

impl std::str::FromStr for CvMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "louo" => Ok(CvMode::Louo),
            "loto" => Ok(CvMode::Loto),
            "loto-suite" => Ok(CvMode::LotoSuite),
            _ => Err(format!(
                "unknown cross-validation mode {s:?} (expected louo, loto, loto-suite)"
            )),
        }
    }
}

/// Values that replace the per-fold model defaults when set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub filters: Option<Vec<usize>>,
    pub kernel_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub epochs: Option<usize>,
}

impl ModelOverrides {
    pub fn apply(&self, cfg: &mut ModelConfig) {
        if let Some(f) = &self.filters {
            cfg.filters = f.clone();
        }
        if let Some(k) = self.kernel_size {
            cfg.kernel_size = k;
        }
        if let Some(lr) = self.learning_rate {
            cfg.learning_rate = lr;
        }
        if let Some(wd) = self.weight_decay {
            cfg.weight_decay = wd;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
    }
}

/// Kinematic columns used as model input. Without `arms`, single-arm
/// granularities use their own arm and the others use both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub arms: Option<ArmSelection>,
    pub offset: usize,
}

/// One experiment: a granularity, a cross-validation scheme over a task
/// selection, and model settings.
///
/// ```toml
/// catalog = "manifest.toml"
/// granularity = "gesture"
/// cv = "louo"
/// tasks = ["S"]
/// output = "runs/s-gesture"
/// seed = 7
///
/// [model]
/// epochs = 60
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Catalog manifest; data paths in it resolve against its directory.
    pub catalog: PathBuf,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default)]
    pub cv: CvMode,
    /// Task ids or combination names for LOUO; empty means every task.
    #[serde(default)]
    pub tasks: Vec<String>,
    #[serde(default)]
    pub test_task: Option<String>,
    /// Task ids or combination names trained on in LOTO.
    #[serde(default)]
    pub train_tasks: Vec<String>,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub features: FeatureConfig,
    /// Z-score features with statistics of the training trials.
    #[serde(default = "yes")]
    pub standardize: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Folds trained at once; 0 lets the thread pool decide.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub execution: Execution,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(catalog: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            catalog: catalog.into(),
            granularity: Granularity::Gesture,
            cv: CvMode::Louo,
            tasks: Vec::new(),
            test_task: None,
            train_tasks: Vec::new(),
            model: ModelOverrides::default(),
            features: FeatureConfig::default(),
            standardize: true,
            output: None,
            seed: 0,
            workers: 0,
            execution: Execution::Parallel,
        }
    }

    /// Parses a TOML config; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        cfg.catalog = base.join(&cfg.catalog);
        cfg.output = cfg.output.map(|o| base.join(o));
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunnerError::io(path, e))?;
        ExperimentConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Checks that need no catalog.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RunnerError::Config(m));
        match self.cv {
            CvMode::Loto => {
                let Some(test) = &self.test_task else {
                    return bad("cv = loto requires a test task".into());
                };
                if self.train_tasks.is_empty() {
                    return bad("cv = loto requires training tasks".into());
                }
                if expand_tasks(&self.train_tasks)?.contains(test) {
                    return bad(format!("test task {test} is also a training task"));
                }
            }
            CvMode::Louo | CvMode::LotoSuite => {
                if self.test_task.is_some() || !self.train_tasks.is_empty() {
                    return bad(format!(
                        "test_task/train_tasks only apply to cv = loto, not {}",
                        self.cv.as_str()
                    ));
                }
            }
        }
        if self.granularity == Granularity::Gesture && self.cv != CvMode::LotoSuite {
            let mut selected = expand_tasks(&self.tasks)?;
            selected.extend(expand_tasks(&self.train_tasks)?);
            selected.extend(self.test_task.iter().cloned());
            let rosma = resolve_task_combo("ROSMA")?;
            if let Some(t) = selected.iter().find(|t| rosma.contains(*t)) {
                return bad(format!("task {t} has no gesture labels"));
            }
        }
        let mut probe = ModelConfig::new(3, 1, self.cv.defaults(), 0);
        self.model.apply(&mut probe);
        probe.validate().map_err(|e| RunnerError::Config(e.to_string()))?;
        Ok(())
    }

    /// Task ids selected for LOUO, checked against the catalog.
    pub fn louo_tasks(&self, catalog: &Catalog) -> Result<BTreeSet<String>> {
        let tasks = if self.tasks.is_empty() {
            catalog.tasks()
        } else {
            expand_tasks(&self.tasks)?
        };
        if self.granularity == Granularity::Gesture {
            for t in &tasks {
                if !dataset_has_gestures(catalog.dataset_of_task(t).unwrap_or_default()) {
                    return Err(RunnerError::Config(format!("task {t} has no gesture labels")));
                }
            }
        }
        Ok(tasks)
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        let arms = self.features.arms.unwrap_or(match self.granularity {
            Granularity::MpLeft => ArmSelection::Left,
            Granularity::MpRight => ArmSelection::Right,
            _ => ArmSelection::Both,
        });
        FeatureSpec::standard(arms, self.features.offset)
    }

    /// Model settings for one fold before overrides are applied.
    pub fn model_config(&self, kernel_size: usize, classes: usize, seed: u64) -> ModelConfig {
        let mut cfg = ModelConfig::new(kernel_size, classes, self.cv.defaults(), seed);
        self.model.apply(&mut cfg);
        cfg
    }
}

/// Union of task ids and combination names.
pub fn expand_tasks(names: &[String]) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for n in names {
        for part in n.split('+').map(str::trim).filter(|p| !p.is_empty()) {
            out.extend(resolve_task_combo(part)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loto(test: &str, train: &[&str]) -> ExperimentConfig {
        ExperimentConfig {
            cv: CvMode::Loto,
            test_task: Some(test.into()),
            train_tasks: train.iter().map(|s| s.to_string()).collect(),
            granularity: Granularity::Mp,
            ..ExperimentConfig::new("m.toml")
        }
    }

    #[test]
    fn loto_overlap_rejected() {
        assert!(loto("S", &["NP", "KT"]).validate().is_ok());
        assert!(matches!(loto("S", &["SNP"]).validate(), Err(RunnerError::Config(_))));
        let mut c = loto("S", &["NP"]);
        c.test_task = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn gesture_with_rosma_rejected() {
        let mut c = ExperimentConfig::new("m.toml");
        c.tasks = vec!["All".into()];
        assert!(c.validate().is_err());
        c.tasks = vec!["JIGSAWS".into()];
        assert!(c.validate().is_ok());
        c.granularity = Granularity::Mp;
        c.tasks = vec!["All".into()];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_paths_resolve_against_file() {
        let cfg = ExperimentConfig::from_toml(
            "catalog = \"data/manifest.toml\"\ngranularity = \"mp-left\"\ncv = \"louo\"\noutput = \"out\"\n[model]\nepochs = 3\n",
            Path::new("/exp"),
        )
        .unwrap();
        assert_eq!(cfg.catalog, PathBuf::from("/exp/data/manifest.toml"));
        assert_eq!(cfg.output, Some(PathBuf::from("/exp/out")));
        assert_eq!(cfg.model.epochs, Some(3));
        assert_eq!(cfg.feature_spec().width(), 7);
        assert!(ExperimentConfig::from_toml("catalog = \"m\"\nbogus = 1\n", Path::new(".")).is_err());
    }

    #[test]
    fn cv_defaults_and_overrides() {
        let mut c = ExperimentConfig::new("m.toml");
        let m = c.model_config(5, 4, 1);
        assert_eq!((m.learning_rate, m.weight_decay), (5e-5, 5e-4));
        c.cv = CvMode::LotoSuite;
        c.model.learning_rate = Some(1e-3);
        let m = c.model_config(5, 4, 1);
        assert_eq!((m.learning_rate, m.weight_decay), (1e-3, 1e-3));
    }
}
