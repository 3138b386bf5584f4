use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::Fft;
use crate::error::{Error, Result};

/// Framing parameters of the enhancement path.
///
/// The defaults are the hearing-aid setting: 4 ms Hann window, 2 ms hop,
/// 128-point FFT with the 64-sample frame centered (32 zeros on each side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub window_len: usize,
    pub hop: usize,
    pub nfft: usize,
    pub pad_front: usize,
    pub pad_back: usize,
    pub n_bins: usize,
}

impl StftConfig {
    pub const fn hearing_aid() -> Self {
        Self {
            sample_rate: 16_000,
            window_len: 64,
            hop: 32,
            nfft: 128,
            pad_front: 32,
            pad_back: 32,
            n_bins: 65,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.window_len == 0 || self.window_len % 2 != 0 {
            return bad("window length must be even and nonzero");
        }
        if self.window_len != 2 * self.hop {
            return bad("window length must be twice the hop");
        }
        if !self.nfft.is_power_of_two() || self.nfft < self.window_len {
            return bad("nfft must be a power of two no shorter than the window");
        }
        let pad = (self.nfft - self.window_len) / 2;
        if self.pad_front != pad || self.pad_back != pad || pad * 2 + self.window_len != self.nfft {
            return bad("front and back padding must be equal and fill nfft");
        }
        if self.n_bins != self.nfft / 2 + 1 {
            return bad("n_bins must equal nfft/2 + 1");
        }
        Ok(())
    }

    /// Frequency of bin `k` in Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.nfft as f64
    }
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::hearing_aid()
    }
}

/// Periodic Hann window, `0.5 * (1 - cos(2πn/N))`.
pub fn analysis_window(cfg: &StftConfig) -> Vec<f64> {
    let n = cfg.window_len as f64;
    (0..cfg.window_len).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n).cos())).collect()
}

/// One-sided spectra of one analysis frame for every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub frame_index: u64,
    channels: usize,
    n_bins: usize,
    bins: Vec<Complex64>,
}

impl SpectralFrame {
    pub fn zeros(channels: usize, n_bins: usize) -> Self {
        Self { frame_index: 0, channels, n_bins, bins: vec![Complex64::new(0.0, 0.0); channels * n_bins] }
    }

    pub fn n_channels(&self) -> usize {
        self.channels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn channel(&self, m: usize) -> &[Complex64] {
        &self.bins[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn channel_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.bins[m * self.n_bins..(m + 1) * self.n_bins]
    }
}

/// Streaming multichannel STFT analysis.
///
/// Each call consumes one hop per channel; the frame covers the previous
/// hop plus the new one.
#[derive(Debug, Clone)]
pub struct StftAnalyzer {
    cfg: StftConfig,
    channels: usize,
    window: Vec<f64>,
    history: Vec<f64>,
    fft: Fft,
    buf: Vec<Complex64>,
    frame_index: u64,
}

impl StftAnalyzer {
    pub fn new(cfg: StftConfig, channels: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            channels,
            window: analysis_window(&cfg),
            history: vec![0.0; channels * (cfg.window_len - cfg.hop)],
            fft: Fft::new(cfg.nfft),
            buf: vec![Complex64::new(0.0, 0.0); cfg.nfft],
            frame_index: 0,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    pub fn n_channels(&self) -> usize {
        self.channels
    }

    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|x| *x = 0.0);
        self.frame_index = 0;
    }

    /// Analyzes one planar block (`channels * hop` samples, channel-major).
    pub fn analyze(&mut self, block: &[f64]) -> Result<SpectralFrame> {
        let mut frame = SpectralFrame::zeros(self.channels, self.cfg.n_bins);
        self.analyze_into(block, &mut frame)?;
        Ok(frame)
    }

    pub fn analyze_into(&mut self, block: &[f64], frame: &mut SpectralFrame) -> Result<()> {
        let hop = self.cfg.hop;
        if block.len() != self.channels * hop {
            return Err(Error::ChannelMismatch { expected: self.channels, found: block.len() / hop });
        }
        if frame.channels != self.channels || frame.n_bins != self.cfg.n_bins {
            return Err(Error::ChannelMismatch { expected: self.channels, found: frame.channels });
        }
        let keep = self.cfg.window_len - hop;
        let pad = self.cfg.pad_front;
        for m in 0..self.channels {
            let hist = &mut self.history[m * keep..(m + 1) * keep];
            let new = &block[m * hop..(m + 1) * hop];
            self.buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (i, (&x, &w)) in hist.iter().chain(new).zip(&self.window).enumerate() {
                self.buf[pad + i] = Complex64::new(x * w, 0.0);
            }
            // slide: keep the newest `keep` samples
            if keep > hop {
                hist.copy_within(hop.., 0);
            }
            let tail = keep.min(hop);
            hist[keep - tail..].copy_from_slice(&new[hop - tail..]);
            self.fft.forward(&mut self.buf);
            let out = frame.channel_mut(m);
            out.copy_from_slice(&self.buf[..self.cfg.n_bins]);
            out[0].im = 0.0;
            out[self.cfg.n_bins - 1].im = 0.0;
        }
        frame.frame_index = self.frame_index;
        self.frame_index += 1;
        Ok(())
    }
}

/// Streaming single-channel inverse STFT with plain overlap-add.
///
/// The periodic Hann at 50 % overlap sums to one, so no synthesis window is
/// applied. A completed hop is held back for one more hop, which puts the
/// analysis-synthesis delay at exactly one window length.
#[derive(Debug, Clone)]
pub struct StftSynthesizer {
    cfg: StftConfig,
    fft: Fft,
    buf: Vec<Complex64>,
    overlap: Vec<f64>,
    pending: Vec<f64>,
}

impl StftSynthesizer {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            fft: Fft::new(cfg.nfft),
            buf: vec![Complex64::new(0.0, 0.0); cfg.nfft],
            overlap: vec![0.0; cfg.window_len],
            pending: vec![0.0; cfg.hop],
        })
    }

    /// Delay from analysis input to synthesis output, in samples.
    pub fn latency(&self) -> usize {
        self.cfg.window_len
    }

    pub fn reset(&mut self) {
        self.overlap.iter_mut().for_each(|x| *x = 0.0);
        self.pending.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Consumes one one-sided spectrum and writes `hop` output samples.
    pub fn synthesize(&mut self, bins: &[Complex64], out: &mut [f64]) -> Result<()> {
        let (nfft, n_bins, hop) = (self.cfg.nfft, self.cfg.n_bins, self.cfg.hop);
        if bins.len() != n_bins {
            return Err(Error::LengthMismatch { expected: n_bins, found: bins.len() });
        }
        if out.len() != hop {
            return Err(Error::LengthMismatch { expected: hop, found: out.len() });
        }
        self.buf[..n_bins].copy_from_slice(bins);
        for k in 1..n_bins - 1 {
            self.buf[nfft - k] = bins[k].conj();
        }
        self.fft.inverse(&mut self.buf);
        let scale = 1.0 / nfft as f64;
        let seg = &self.buf[self.cfg.pad_front..self.cfg.pad_front + self.cfg.window_len];
        for (acc, c) in self.overlap.iter_mut().zip(seg) {
            *acc += c.re * scale;
        }
        out.copy_from_slice(&self.pending);
        self.pending.copy_from_slice(&self.overlap[..hop]);
        self.overlap.copy_within(hop.., 0);
        let len = self.overlap.len();
        self.overlap[len - hop..].iter_mut().for_each(|x| *x = 0.0);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> StftConfig {
        StftConfig::hearing_aid()
    }

    fn direct_dft_bin(x: &[f64], k: usize, n: usize) -> Complex64 {
        x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (i, &v)| {
            let phi = -2.0 * PI * ((k * i) % n) as f64 / n as f64;
            acc + Complex64::new(v * phi.cos(), v * phi.sin())
        })
    }

    fn frames_of(signal: &[f64]) -> Vec<SpectralFrame> {
        let mut an = StftAnalyzer::new(cfg(), 1).unwrap();
        signal.chunks(32).map(|b| an.analyze(b).unwrap()).collect()
    }

    fn round_trip(signal: &[f64]) -> Vec<f64> {
        let mut an = StftAnalyzer::new(cfg(), 1).unwrap();
        let mut syn = StftSynthesizer::new(cfg()).unwrap();
        let mut out = vec![0.0; signal.len()];
        for (b, o) in signal.chunks(32).zip(out.chunks_mut(32)) {
            let f = an.analyze(b).unwrap();
            syn.synthesize(f.channel(0), o).unwrap();
        }
        out
    }

    #[test]
    fn config_invariants() {
        let c = cfg();
        c.validate().unwrap();
        assert_eq!(c.window_len, 2 * c.hop);
        assert_eq!(c.n_bins, c.nfft / 2 + 1);
        let bad = StftConfig { pad_front: 30, ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn window_values() {
        let w = analysis_window(&cfg());
        assert_eq!(w[0], 0.0);
        assert!((w[32] - 1.0).abs() < 1e-15);
        // direct summation oracle
        let mut sum = 0.0;
        for n in 0..64 {
            sum += 0.5 - 0.5 * (2.0 * PI * n as f64 / 64.0).cos();
        }
        assert!((w.iter().sum::<f64>() - sum).abs() < 1e-12);
        assert!((sum - 32.0).abs() < 1e-12);
        for n in 0..32 {
            assert!((w[n] + w[n + 32] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let f = frames_of(&[0.0; 128]);
        assert!(f.iter().all(|fr| fr.channel(0).iter().all(|c| c.norm() == 0.0)));
    }

    #[test]
    fn constant_input_dc_bin() {
        let f = frames_of(&[1.0; 128]);
        // steady state from frame 1 on: sum of the Hann window
        let dc = f[3].channel(0)[0];
        assert!((dc.re - 32.0).abs() < 1e-12 && dc.im == 0.0);
        assert_eq!(f[3].frame_index, 3);
    }

    #[test]
    fn tone_bin_matches_direct_dft() {
        let x: Vec<f64> = (0..256).map(|n| (2.0 * PI * 2000.0 * n as f64 / 16000.0).cos()).collect();
        let frames = frames_of(&x);
        let w = analysis_window(&cfg());
        for t in 1..8 {
            let mut padded = vec![0.0; 128];
            for i in 0..64 {
                padded[32 + i] = x[(t - 1) * 32 + i] * w[i];
            }
            for k in [0, 15, 16, 17, 64] {
                let want = direct_dft_bin(&padded, k, 128);
                let got = frames[t].channel(0)[k];
                assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0), "t={t} k={k}");
            }
        }
    }

    #[test]
    fn dc_and_nyquist_are_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..320).map(|_| rng.random_range(-1.0..1.0)).collect();
        for f in frames_of(&x) {
            assert_eq!(f.channel(0)[0].im, 0.0);
            assert_eq!(f.channel(0)[64].im, 0.0);
        }
    }

    #[test]
    fn parseval_per_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..640).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = analysis_window(&cfg());
        for (t, f) in frames_of(&x).iter().enumerate().skip(1) {
            let time: f64 = (0..64).map(|i| (x[(t - 1) * 32 + i] * w[i]).powi(2)).sum();
            let b = f.channel(0);
            let mut freq = b[0].norm_sqr() + b[64].norm_sqr();
            freq += 2.0 * b[1..64].iter().map(|c| c.norm_sqr()).sum::<f64>();
            freq /= 128.0;
            assert!((freq - time).abs() <= 1e-9 * time);
        }
    }

    #[test]
    fn zero_frame_synthesizes_zero() {
        let mut syn = StftSynthesizer::new(cfg()).unwrap();
        let mut out = [1.0; 32];
        syn.synthesize(&[Complex64::new(0.0, 0.0); 65], &mut out).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
        assert!(syn.synthesize(&[Complex64::new(0.0, 0.0); 64], &mut out).is_err());
    }

    #[test]
    fn round_trip_tone_delayed_by_window() {
        let x: Vec<f64> = (0..3200).map(|n| (2.0 * PI * 1000.0 * n as f64 / 16000.0).sin()).collect();
        let y = round_trip(&x);
        for n in 128..x.len() {
            assert!((y[n] - x[n - 64]).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn round_trip_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..16000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = round_trip(&x);
        let (mut err, mut sig) = (0.0, 0.0);
        for n in 128..x.len() {
            err += (y[n] - x[n - 64]).powi(2);
            sig += x[n - 64].powi(2);
        }
        assert!(10.0 * (err / sig).log10() < -60.0);
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let mut an = StftAnalyzer::new(cfg(), 2).unwrap();
        assert!(matches!(an.analyze(&[0.0; 32]), Err(Error::ChannelMismatch { .. })));
    }
}
