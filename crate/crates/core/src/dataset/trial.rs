use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, DatasetError, Result};

/// Kinematic sampling rate of every trial.
pub const SAMPLE_RATE_HZ: f64 = 30.0;

/// One recorded trial: `frames × channels` kinematic samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicTrial {
    pub task: String,
    pub subject: String,
    pub trial: String,
    pub sample_rate: f64,
    frames: usize,
    channels: usize,
    /// Row-major, one row per frame.
    data: Vec<f64>,
}

impl KinematicTrial {
    pub fn new(frames: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 || channels == 0 || data.len() != frames * channels {
            return Err(DatasetError::Manifest(format!(
                "{} values cannot form a {frames}x{channels} trial",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonNumericCell {
                path: Default::default(),
                line: i / channels + 1,
                column: i % channels + 1,
                value: data[i].to_string(),
            });
        }
        Ok(KinematicTrial {
            task: String::new(),
            subject: String::new(),
            trial: String::new(),
            sample_rate: SAMPLE_RATE_HZ,
            frames,
            channels,
            data,
        })
    }

    pub fn with_identity(mut self, task: &str, subject: &str, trial: &str) -> Self {
        self.task = task.to_string();
        self.subject = subject.to_string();
        self.trial = trial.to_string();
        self
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    #[inline]
    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.channels + c]
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.sample_rate
    }
}

/// Parses delimiter-separated numeric text (whitespace and/or commas).
pub fn parse_kinematics(text: &str, origin: &Path) -> Result<KinematicTrial> {
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut frames = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(DatasetError::RaggedRows {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    expected: w,
                    actual: cells.len(),
                })
            }
            _ => {}
        }
        for (j, cell) in cells.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(DatasetError::NonNumericCell {
                        path: origin.to_path_buf(),
                        line: i + 1,
                        column: j + 1,
                        value: cell.to_string(),
                    })
                }
            }
        }
        frames += 1;
    }
    match width {
        Some(w) if w > 0 => KinematicTrial::new(frames, w, data),
        _ => Err(DatasetError::EmptyFile(origin.to_path_buf())),
    }
}

/// Loads a kinematics file. When `expected_channels` is given the channel
/// count must match exactly.
pub fn load_trial_kinematics(path: &Path, expected_channels: Option<usize>) -> Result<KinematicTrial> {
    let trial = parse_kinematics(&read_text(path)?, path)?;
    if let Some(expected) = expected_channels {
        if expected != trial.channels() {
            return Err(DatasetError::ChannelMismatch {
                expected,
                actual: trial.channels(),
            });
        }
    }
    Ok(trial)
}
