use serde::{Deserialize, Serialize};

use super::{NnError, Result};

/// A `channels × length` matrix of activations, stored row-major by channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor2 {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    pub fn from_vec(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(NnError::ShapeMismatch(format!(
                "{} values for a {channels}x{length} tensor",
                data.len()
            )));
        }
        Ok(Tensor2 { channels, length, data })
    }

    /// Builds a tensor from per-channel rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let length = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != length) {
            return Err(NnError::ShapeMismatch("ragged rows".into()));
        }
        Ok(Tensor2 {
            channels: rows.len(),
            length,
            data: rows.concat(),
        })
    }

    /// Builds a `channels × frames` tensor from frame-major records
    /// (one `Vec` per time step), i.e. transposes a `T × D` matrix.
    pub fn from_frames(frames: &[Vec<f64>]) -> Result<Self> {
        let channels = frames.first().map_or(0, Vec::len);
        if frames.iter().any(|f| f.len() != channels) {
            return Err(NnError::ShapeMismatch("ragged frames".into()));
        }
        let length = frames.len();
        let mut out = Tensor2::zeros(channels, length);
        for (t, frame) in frames.iter().enumerate() {
            for (c, &v) in frame.iter().enumerate() {
                out.data[c * length + t] = v;
            }
        }
        Ok(out)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.data[c * self.length + t]
    }

    #[inline]
    pub fn set(&mut self, c: usize, t: usize, v: f64) {
        self.data[c * self.length + t] = v;
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    /// Values of frame `t` across channels.
    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.get(c, t)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Element-wise `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &Tensor2, b: f64) -> Result<Tensor2> {
        if self.channels != other.channels || self.length != other.length {
            return Err(NnError::ShapeMismatch("lincomb operands differ".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Tensor2 {
            channels: self.channels,
            length: self.length,
            data,
        })
    }

    /// Sub-tensor of frames `start..end`.
    pub fn slice_frames(&self, start: usize, end: usize) -> Tensor2 {
        let len = end - start;
        let mut out = Tensor2::zeros(self.channels, len);
        for c in 0..self.channels {
            out.row_mut(c).copy_from_slice(&self.row(c)[start..end]);
        }
        out
    }
}
