use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureScaler, Result, TcnError, TcnModel};
use crate::dataset::{FeatureSpec, Granularity};

pub const CHECKPOINT_FORMAT: &str = "surgact-tcn";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained model plus everything needed to apply it to new trials.
///
/// Stored as JSON; floats are written in shortest round-trip form so a
/// save/load cycle is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub granularity: Granularity,
    pub labels: Vec<String>,
    pub features: FeatureSpec,
    pub scaler: Option<FeatureScaler>,
    pub model: TcnModel,
}

impl Checkpoint {
    pub fn new(
        model: TcnModel,
        granularity: Granularity,
        labels: Vec<String>,
        features: FeatureSpec,
        scaler: Option<FeatureScaler>,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            granularity,
            labels,
            features,
            scaler,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| TcnError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| TcnError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(TcnError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| TcnError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| TcnError::Checkpoint(format!("{}: {e}", path.display())))?;
        Checkpoint::from_json(&text)
    }
}
