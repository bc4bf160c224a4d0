use serde::{Deserialize, Serialize};

use super::{Result, TcnError};

pub const DEFAULT_FILTERS: [usize; 3] = [32, 64, 96];
pub const DEFAULT_EPOCHS: usize = 60;

/// Learning rate and weight decay fixed per cross-validation setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvDefaults {
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl CvDefaults {
    pub const LOUO: CvDefaults = CvDefaults {
        learning_rate: 5e-5,
        weight_decay: 5e-4,
    };
    pub const LOTO: CvDefaults = CvDefaults {
        learning_rate: 1e-4,
        weight_decay: 1e-3,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub filters: Vec<usize>,
    pub kernel_size: usize,
    pub num_classes: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kernel_size: usize, num_classes: usize, defaults: CvDefaults, seed: u64) -> Self {
        ModelConfig {
            filters: DEFAULT_FILTERS.to_vec(),
            kernel_size,
            num_classes,
            learning_rate: defaults.learning_rate,
            weight_decay: defaults.weight_decay,
            epochs: DEFAULT_EPOCHS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TcnError::InvalidConfig(m));
        if self.filters.is_empty() || self.filters.contains(&0) {
            return bad(format!("filters must be non-empty and positive: {:?}", self.filters));
        }
        if self.kernel_size < 3 || self.kernel_size.is_multiple_of(2) {
            return bad(format!(
                "kernel size must be odd and at least 3, got {}",
                self.kernel_size
            ));
        }
        if self.num_classes == 0 {
            return bad("at least one class is required".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        Ok(())
    }

    /// Shortest input the encoder can pool down without running out of frames.
    pub fn min_length(&self) -> usize {
        1 << self.filters.len()
    }
}
