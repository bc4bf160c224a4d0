use serde::{Deserialize, Serialize};

use super::trial::KinematicTrial;
use super::{DatasetError, Result};
use crate::nn::Tensor2;

/// Columns per arm in the standard layout: position (3), rotation matrix (9),
/// linear velocity (3), angular velocity (3), gripper angle (1).
pub const ARM_STRIDE: usize = 19;

/// Columns holding one arm's position, linear velocity, and gripper angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmColumns {
    pub position: [usize; 3],
    pub linear_velocity: [usize; 3],
    pub gripper: usize,
}

impl ArmColumns {
    /// Standard layout for an arm whose block starts at column `base`.
    pub fn standard(base: usize) -> Self {
        ArmColumns {
            position: [base, base + 1, base + 2],
            linear_velocity: [base + 12, base + 13, base + 14],
            gripper: base + 18,
        }
    }

    fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.position
            .iter()
            .chain(&self.linear_velocity)
            .copied()
            .chain(std::iter::once(self.gripper))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmSelection {
    #[default]
    Both,
    Left,
    Right,
}

/// Which kinematic columns feed the model, left arm first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub arms: Vec<ArmColumns>,
}

impl FeatureSpec {
    /// Standard layout with the left arm at `offset` and the right arm at
    /// `offset + ARM_STRIDE`.
    pub fn standard(selection: ArmSelection, offset: usize) -> Self {
        let left = ArmColumns::standard(offset);
        let right = ArmColumns::standard(offset + ARM_STRIDE);
        let arms = match selection {
            ArmSelection::Both => vec![left, right],
            ArmSelection::Left => vec![left],
            ArmSelection::Right => vec![right],
        };
        FeatureSpec { arms }
    }

    pub fn columns(&self) -> Vec<usize> {
        self.arms.iter().flat_map(ArmColumns::columns).collect()
    }

    pub fn width(&self) -> usize {
        self.arms.len() * 7
    }
}

/// Copies the selected columns into a `features × frames` tensor.
pub fn select_features(trial: &KinematicTrial, spec: &FeatureSpec) -> Result<Tensor2> {
    let cols = spec.columns();
    for (i, &c) in cols.iter().enumerate() {
        if c >= trial.channels() {
            return Err(DatasetError::IndexOutOfRange {
                index: c,
                channels: trial.channels(),
            });
        }
        if cols[..i].contains(&c) {
            return Err(DatasetError::DuplicateColumn(c));
        }
    }
    let frames = trial.frames();
    let mut out = Tensor2::zeros(cols.len(), frames);
    for (f, &c) in cols.iter().enumerate() {
        let row = out.row_mut(f);
        for (t, v) in row.iter_mut().enumerate() {
            *v = trial.value(t, c);
        }
    }
    Ok(out)
}
