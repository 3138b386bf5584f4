//! Processor contract and streaming driver.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::audio::MultichannelAudio;
use crate::error::{Error, Result};
use crate::{mic, SAMPLE_RATE};

/// Block size of the streaming driver: one STFT hop (2 ms).
pub const HOP: usize = 32;

/// A causal block processor turning microphone signals into two ear signals.
///
/// Buffers are planar: `input` holds `n_in_channels() * len` samples,
/// channel-major, and `output` holds `n_out_channels() * len`. The driver
/// always calls with `len == HOP`.
pub trait FrameProcessor {
    fn name(&self) -> &str;

    fn n_in_channels(&self) -> usize;

    fn n_out_channels(&self) -> usize {
        2
    }

    /// Algorithmic latency in samples.
    fn latency(&self) -> usize;

    fn reset(&mut self);

    fn process_block(&mut self, input: &[f64], output: &mut [f64]);
}

impl<P: FrameProcessor + ?Sized> FrameProcessor for alloc::boxed::Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn n_in_channels(&self) -> usize {
        (**self).n_in_channels()
    }
    fn n_out_channels(&self) -> usize {
        (**self).n_out_channels()
    }
    fn latency(&self) -> usize {
        (**self).latency()
    }
    fn reset(&mut self) {
        (**self).reset()
    }
    fn process_block(&mut self, input: &[f64], output: &mut [f64]) {
        (**self).process_block(input, output)
    }
}

/// Result of [`process_stream`].
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutput {
    pub audio: MultichannelAudio,
    /// Input samples with magnitude above 1.0 (accepted, but counted).
    pub clipped_input: usize,
    /// Output samples with magnitude above 1.0.
    pub clipped_output: usize,
}

/// Copies samples `[start, start + len)` of every channel into `buf`
/// (planar), zero-filling past the end of the signal.
pub fn gather_block(audio: &MultichannelAudio, start: usize, len: usize, buf: &mut [f64]) {
    for (m, ch) in audio.channels().iter().enumerate() {
        let dst = &mut buf[m * len..(m + 1) * len];
        let end = (start + len).min(ch.len());
        let avail = end.saturating_sub(start);
        dst[..avail].copy_from_slice(&ch[start..end]);
        dst[avail..].iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Checks shape, rate and finiteness of `audio` for `proc`.
pub fn check_input<P: FrameProcessor + ?Sized>(proc: &P, audio: &MultichannelAudio) -> Result<()> {
    if audio.n_channels() != proc.n_in_channels() {
        return Err(Error::ChannelMismatch { expected: proc.n_in_channels(), found: audio.n_channels() });
    }
    if audio.sample_rate() != SAMPLE_RATE {
        return Err(Error::InvalidConfig(alloc::format!(
            "expected {SAMPLE_RATE} Hz, got {} Hz",
            audio.sample_rate()
        )));
    }
    if !audio.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Runs `proc` over `audio` in hop-sized blocks.
///
/// A trailing partial block is zero-padded and the output is truncated to
/// the input length. The processor is not reset first, so consecutive calls
/// continue one stream.
pub fn process_stream<P: FrameProcessor + ?Sized>(proc: &mut P, audio: &MultichannelAudio) -> Result<StreamOutput> {
    check_input(proc, audio)?;
    let (n_in, n_out, len) = (proc.n_in_channels(), proc.n_out_channels(), audio.len());
    let mut inbuf = vec![0.0; n_in * HOP];
    let mut outbuf = vec![0.0; n_out * HOP];
    let mut out = vec![Vec::with_capacity(len + HOP); n_out];
    let mut start = 0;
    while start < len {
        gather_block(audio, start, HOP, &mut inbuf);
        proc.process_block(&inbuf, &mut outbuf);
        for (m, ch) in out.iter_mut().enumerate() {
            ch.extend_from_slice(&outbuf[m * HOP..(m + 1) * HOP]);
        }
        start += HOP;
    }
    out.iter_mut().for_each(|ch| ch.truncate(len));
    let audio_out = MultichannelAudio::new(audio.sample_rate(), out)?;
    Ok(StreamOutput {
        clipped_input: audio.count_clipped(),
        clipped_output: audio_out.count_clipped(),
        audio: audio_out,
    })
}

/// Front-left / front-right passthrough, optionally delayed.
#[derive(Debug, Clone)]
pub struct Bypass {
    latency: usize,
    lines: [VecDeque<f64>; 2],
}

impl Bypass {
    pub fn new() -> Self {
        Self::delayed(0)
    }

    /// Bypass with `latency` samples of pure delay, for time alignment with
    /// STFT-domain processors.
    pub fn delayed(latency: usize) -> Self {
        let line = VecDeque::from(vec![0.0; latency]);
        Self { latency, lines: [line.clone(), line] }
    }
}

impl Default for Bypass {
    fn default() -> Self {
        Self::new()
    }
}

impl FrameProcessor for Bypass {
    fn name(&self) -> &str {
        "bypass"
    }

    fn n_in_channels(&self) -> usize {
        mic::COUNT
    }

    fn latency(&self) -> usize {
        self.latency
    }

    fn reset(&mut self) {
        *self = Self::delayed(self.latency);
    }

    fn process_block(&mut self, input: &[f64], output: &mut [f64]) {
        let len = input.len() / mic::COUNT;
        for (ear, src) in [mic::FRONT_LEFT, mic::FRONT_RIGHT].into_iter().enumerate() {
            let line = &mut self.lines[ear];
            for i in 0..len {
                line.push_back(input[src * len + i]);
                output[ear * len + i] = line.pop_front().unwrap_or(0.0);
            }
        }
    }
}

/// Broadband gain applied to the front microphones.
#[derive(Debug, Clone)]
pub struct GainProcessor {
    gain: f64,
}

impl GainProcessor {
    pub fn new(gain_db: f64) -> Result<Self> {
        if !gain_db.is_finite() {
            return Err(Error::InvalidConfig("gain must be finite".into()));
        }
        Ok(Self { gain: libm::pow(10.0, gain_db / 20.0) })
    }

    pub fn linear_gain(&self) -> f64 {
        self.gain
    }
}

impl FrameProcessor for GainProcessor {
    fn name(&self) -> &str {
        "gain"
    }

    fn n_in_channels(&self) -> usize {
        mic::COUNT
    }

    fn latency(&self) -> usize {
        0
    }

    fn reset(&mut self) {}

    fn process_block(&mut self, input: &[f64], output: &mut [f64]) {
        let len = input.len() / mic::COUNT;
        for (ear, src) in [mic::FRONT_LEFT, mic::FRONT_RIGHT].into_iter().enumerate() {
            for i in 0..len {
                output[ear * len + i] = self.gain * input[src * len + i];
            }
        }
    }
}

/// Wall-clock statistics of a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct RtfReport {
    pub audio_seconds: f64,
    pub wall_seconds: f64,
    pub rtf: f64,
    pub per_frame_p50_us: f64,
    pub per_frame_p95_us: f64,
    pub per_frame_p99_us: f64,
    pub per_frame_max_us: f64,
    pub frames: usize,
    /// Frames whose processing took longer than one hop.
    pub deadline_misses: usize,
}

impl RtfReport {
    /// Hop duration in microseconds; the per-frame processing deadline.
    pub const DEADLINE_US: f64 = HOP as f64 * 1e6 / SAMPLE_RATE as f64;

    pub fn from_timings(audio_seconds: f64, wall_seconds: f64, frame_us: &[f64]) -> Self {
        let mut sorted = frame_us.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            audio_seconds,
            wall_seconds,
            rtf: wall_seconds / audio_seconds,
            per_frame_p50_us: percentile(&sorted, 50.0),
            per_frame_p95_us: percentile(&sorted, 95.0),
            per_frame_p99_us: percentile(&sorted, 99.0),
            per_frame_max_us: sorted.last().copied().unwrap_or(0.0),
            frames: sorted.len(),
            deadline_misses: sorted.iter().filter(|&&t| t > Self::DEADLINE_US).count(),
        }
    }
}

/// Linear-interpolation percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}
