use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Planar PCM buffer: one `Vec` per channel, all of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelAudio {
    sample_rate: u32,
    channels: Vec<Vec<f64>>,
}

impl MultichannelAudio {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidConfig("audio needs at least one channel".into()));
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch { expected: len, found: bad.len() });
        }
        Ok(Self { sample_rate, channels })
    }

    pub fn silence(sample_rate: u32, n_channels: usize, len: usize) -> Self {
        Self { sample_rate, channels: vec![vec![0.0; len]; n_channels.max(1)] }
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Self {
        Self { sample_rate, channels: vec![samples] }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.channels[idx]
    }

    pub fn channel_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.channels[idx]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().flatten().all(|x| x.is_finite())
    }

    /// Number of samples with magnitude above full scale.
    pub fn count_clipped(&self) -> usize {
        self.channels.iter().flatten().filter(|x| x.abs() > 1.0).count()
    }

    /// New buffer with the selected channels, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            sample_rate: self.sample_rate,
            channels: idx.iter().map(|&i| self.channels[i].clone()).collect(),
        }
    }

    /// Samples `[start, start + len)` of every channel (zero-filled past the end).
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|c| (start..start + len).map(|i| c.get(i).copied().unwrap_or(0.0)).collect())
            .collect();
        Self { sample_rate: self.sample_rate, channels }
    }

    pub fn scale(&mut self, gain: f64) {
        self.channels.iter_mut().flatten().for_each(|x| *x *= gain);
    }

    pub fn scaled(&self, gain: f64) -> Self {
        let mut out = self.clone();
        out.scale(gain);
        out
    }

    /// Sample-wise sum. Both buffers must have the same shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.n_channels() != self.n_channels() {
            return Err(Error::ChannelMismatch { expected: self.n_channels(), found: other.n_channels() });
        }
        if other.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: other.len() });
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self { sample_rate: self.sample_rate, channels })
    }

    /// Mean energy per sample of one channel.
    pub fn power(&self, ch: usize) -> f64 {
        crate::eval::power(&self.channels[ch])
    }
}
