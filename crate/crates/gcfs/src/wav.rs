//! WAV reading and writing at the 16 kHz boundary.

use std::path::Path;

use gcfs_core::{MultichannelAudio, SAMPLE_RATE};
use hound::{SampleFormat, WavSpec};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavFormat {
    #[default]
    Float32,
    Int16,
}

/// Reads a WAV file (integer PCM or float) into `[-1, 1]` samples.
/// Anything other than 16 kHz is rejected.
pub fn read_wav(path: &Path) -> AppResult<MultichannelAudio> {
    let mut reader = hound::WavReader::open(path).map_err(|e| AppError::io(path, e))?;
    let spec = reader.spec();
    if spec.sample_rate != SAMPLE_RATE {
        return Err(AppError::io(path, format!("expected {SAMPLE_RATE} Hz, got {} Hz", spec.sample_rate)));
    }
    let n_ch = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>(),
        SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            reader.samples::<i32>().map(|s| s.map(|v| v as f64 / scale)).collect::<Result<_, _>>()
        }
    }
    .map_err(|e| AppError::io(path, e))?;
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n_ch.max(1)); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(v);
        }
    }
    MultichannelAudio::new(SAMPLE_RATE, channels).map_err(|e| AppError::io(path, e))
}

/// Writes all channels interleaved. Int16 output is clipped to full scale.
pub fn write_wav(path: &Path, audio: &MultichannelAudio, format: WavFormat) -> AppResult<()> {
    let (bits, sample_format) = match format {
        WavFormat::Float32 => (32, SampleFormat::Float),
        WavFormat::Int16 => (16, SampleFormat::Int),
    };
    let spec = WavSpec { channels: audio.n_channels() as u16, sample_rate: audio.sample_rate(), bits_per_sample: bits, sample_format };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| AppError::io(path, e))?;
    for i in 0..audio.len() {
        for ch in audio.channels() {
            let r = match format {
                WavFormat::Float32 => w.write_sample(ch[i] as f32),
                WavFormat::Int16 => w.write_sample((ch[i] * 32767.0).round().clamp(-32768.0, 32767.0) as i16),
            };
            r.map_err(|e| AppError::io(path, e))?;
        }
    }
    w.finalize().map_err(|e| AppError::io(path, e))
}
