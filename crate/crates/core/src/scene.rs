//! Free-field scene rendering and SNR-controlled mixing.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand_distr::StandardNormal;

use crate::audio::MultichannelAudio;
use crate::dsp::fracdelay::delay_signal;
use crate::dsp::Fft;
use crate::error::{Error, Result};
use crate::eval::power;
use crate::geometry::{direction, dot, norm, sub, ArrayGeometry};
use crate::{mic, SAMPLE_RATE};

/// Source distance used when a spec does not give one, in metres.
pub const DEFAULT_DISTANCE: f64 = 1.56;

/// Front-mic power every noise component is normalized to before its
/// offset is applied (-26 dBFS RMS).
pub const NOISE_REFERENCE_POWER: f64 = 0.0025;

const DELAY_HALF_WIDTH: usize = 32;

/// Renders a point source at `azimuth_deg` and `distance` metres.
///
/// Each microphone receives the signal delayed by its propagation time
/// and scaled by `1 / max(r, 0.1)`. The output has the input's length.
pub fn render_point_source(
    geom: &ArrayGeometry,
    azimuth_deg: f64,
    distance: f64,
    sig: &[f64],
) -> Result<MultichannelAudio> {
    if !(distance >= 0.5 && distance.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!("source distance {distance} m is below 0.5 m")));
    }
    let dir = direction(azimuth_deg);
    let src = [dir[0] * distance, dir[1] * distance, dir[2] * distance];
    let fs = SAMPLE_RATE as f64;
    let channels = geom
        .mic_positions
        .iter()
        .map(|&p| {
            let r = norm(sub(src, p));
            let g = 1.0 / r.max(0.1);
            let mut y = delay_signal(sig, r / geom.speed_of_sound * fs, DELAY_HALF_WIDTH);
            y.iter_mut().for_each(|v| *v *= g);
            y
        })
        .collect();
    MultichannelAudio::new(SAMPLE_RATE, channels)
}

/// Pseudo-diffuse noise: `n_virtual` phase-randomized copies of `noise`
/// arriving as plane waves from equally spaced azimuths.
///
/// Copies are decorrelated by drawing an independent random phase per
/// frequency bin from `seed`. The result is scaled so the mean power over
/// the four microphones equals the input power.
pub fn render_diffuse(geom: &ArrayGeometry, noise: &[f64], n_virtual: usize, seed: u64) -> Result<MultichannelAudio> {
    if n_virtual < 8 {
        return Err(Error::InvalidConfig(alloc::format!("n_virtual must be at least 8, got {n_virtual}")));
    }
    let len = noise.len();
    let n = len.next_power_of_two().max(2);
    let fft = Fft::new(n);
    let mut spec: Vec<Complex64> = noise.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spec.resize(n, Complex64::new(0.0, 0.0));
    fft.forward(&mut spec);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); half + 1]; mic::COUNT];
    let fs = SAMPLE_RATE as f64;
    for j in 0..n_virtual {
        let u = direction(-180.0 + 360.0 * j as f64 / n_virtual as f64);
        let taus: Vec<f64> = geom.mic_positions.iter().map(|&p| -dot(p, u) / geom.speed_of_sound).collect();
        for k in 0..=half {
            let phase = if k == 0 || k == half {
                if rng.random::<bool>() { 0.0 } else { PI }
            } else {
                rng.random_range(0.0..2.0 * PI)
            };
            let x = spec[k] * Complex64::from_polar(1.0, phase);
            let omega = 2.0 * PI * k as f64 * fs / n as f64;
            for (m, &tau) in taus.iter().enumerate() {
                // plane-wave delays are tiny, so the Nyquist bin stays real enough to drop its imaginary part
                acc[m][k] += x * Complex64::from_polar(1.0, -omega * tau);
            }
        }
    }

    let mut channels = Vec::with_capacity(mic::COUNT);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for a in &acc {
        buf[..=half].copy_from_slice(a);
        buf[0].im = 0.0;
        buf[half].im = 0.0;
        for k in 1..half {
            buf[n - k] = a[k].conj();
        }
        fft.inverse(&mut buf);
        channels.push(buf[..len].iter().map(|z| z.re / n as f64).collect::<Vec<f64>>());
    }
    let p_in = power(noise);
    let p_out = channels.iter().map(|c| power(c)).sum::<f64>() / mic::COUNT as f64;
    if p_out > 0.0 {
        let g = (p_in / p_out).sqrt();
        channels.iter_mut().flatten().for_each(|v| *v *= g);
    }
    MultichannelAudio::new(SAMPLE_RATE, channels)
}

/// Linear convolution truncated to `x.len()`, via zero-padded FFTs.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; x.len()];
    }
    let n = (x.len() + h.len() - 1).next_power_of_two();
    let fft = Fft::new(n);
    let load = |s: &[f64]| {
        let mut v: Vec<Complex64> = s.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        v.resize(n, Complex64::new(0.0, 0.0));
        fft.forward(&mut v);
        v
    };
    let mut a = load(x);
    let b = load(h);
    a.iter_mut().zip(&b).for_each(|(p, q)| *p *= q);
    fft.inverse(&mut a);
    a[..x.len()].iter().map(|z| z.re / n as f64).collect()
}

/// Exponentially decaying noise tail appended to the direct path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reverb {
    /// Time for the tail energy to fall by 60 dB, in seconds.
    pub t60: f64,
    /// Direct-to-reverberant energy ratio in dB.
    pub drr_db: f64,
}

impl Reverb {
    /// Impulse response for one microphone: a unit direct path plus a
    /// Gaussian tail with decay `exp(-6.91 n / (t60 fs))`.
    pub fn impulse_response(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let fs = SAMPLE_RATE as f64;
        let len = ((self.t60 * fs) as usize).max(1);
        let decay = 3.0 * core::f64::consts::LN_10 / (self.t60 * fs);
        let mut tail: Vec<f64> = (1..len)
            .map(|i| {
                let g: f64 = rng.sample(StandardNormal);
                g * libm::exp(-decay * i as f64)
            })
            .collect();
        let e: f64 = tail.iter().map(|v| v * v).sum();
        if e > 0.0 {
            let g = (libm::pow(10.0, -self.drr_db / 10.0) / e).sqrt();
            tail.iter_mut().for_each(|v| *v *= g);
        }
        let mut h = vec![1.0];
        h.extend(tail);
        h
    }

    fn validate(&self) -> Result<()> {
        if !(self.t60 > 0.0 && self.t60 <= 5.0 && self.drr_db.is_finite()) {
            return Err(Error::InvalidConfig("reverb needs 0 < t60 <= 5 s and a finite DRR".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub azimuth: f64,
    pub signal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interferer {
    pub azimuth: f64,
    pub signal: Vec<f64>,
    /// Level below the reference noise level, in dB. Positive values make
    /// the interferer quieter.
    pub snr_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseNoise {
    pub signal: Vec<f64>,
    /// Level relative to the reference noise level, in dB.
    pub level: f64,
    pub n_virtual: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub target: Source,
    pub interferers: Vec<Interferer>,
    pub diffuse: Option<DiffuseNoise>,
    pub better_ear_snr: f64,
    pub seed: u64,
    pub distance: f64,
    pub reverb: Option<Reverb>,
}

impl SceneSpec {
    pub fn new(target: Source, better_ear_snr: f64, seed: u64) -> Self {
        Self {
            target,
            interferers: Vec::new(),
            diffuse: None,
            better_ear_snr,
            seed,
            distance: DEFAULT_DISTANCE,
            reverb: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let az_ok = |a: f64| (-180.0..180.0).contains(&a);
        if !az_ok(self.target.azimuth) || self.interferers.iter().any(|i| !az_ok(i.azimuth)) {
            return Err(Error::InvalidConfig("azimuths must lie in [-180, 180)".into()));
        }
        if !self.better_ear_snr.is_finite()
            || self.interferers.iter().any(|i| !i.snr_offset.is_finite())
            || self.diffuse.as_ref().is_some_and(|d| !d.level.is_finite())
        {
            return Err(Error::InvalidConfig("SNR values must be finite".into()));
        }
        if self.target.signal.is_empty() {
            return Err(Error::DegenerateScene("scene has no target signal"));
        }
        if let Some(r) = &self.reverb {
            r.validate()?;
        }
        Ok(())
    }
}

/// Mixture plus time-aligned clean references.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    pub mixture: MultichannelAudio,
    /// Scaled target at all four microphones.
    pub target_image: MultichannelAudio,
    /// Scaled target at the front-left and front-right microphones.
    pub target_ref: MultichannelAudio,
    pub noise_ref: MultichannelAudio,
    /// Gain applied to the target render to reach the requested SNR.
    pub target_gain: f64,
}

/// Larger of the two front-microphone SNRs in dB.
pub fn better_ear_snr(target: &MultichannelAudio, noise: &MultichannelAudio) -> Result<f64> {
    let snr = |ch: usize| {
        let pn = noise.power(ch);
        if pn > 0.0 { 10.0 * libm::log10(target.power(ch) / pn) } else { f64::INFINITY }
    };
    let v = snr(mic::FRONT_LEFT).max(snr(mic::FRONT_RIGHT));
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::DegenerateScene("noise is silent at both front microphones"));
    }
    Ok(v)
}

fn fit(sig: &[f64], len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = sig.iter().take(len).copied().collect();
    v.resize(len, 0.0);
    v
}

fn front_power(a: &MultichannelAudio) -> f64 {
    0.5 * (a.power(mic::FRONT_LEFT) + a.power(mic::FRONT_RIGHT))
}

fn normalize_front(a: &mut MultichannelAudio, level_db: f64) {
    let p = front_power(a);
    if p > 0.0 {
        a.scale((NOISE_REFERENCE_POWER * libm::pow(10.0, level_db / 10.0) / p).sqrt());
    }
}

/// Renders the spec and scales the target so the better-ear SNR equals
/// `spec.better_ear_snr`. Signals are trimmed or zero-padded to the
/// target's length.
pub fn mix_scene(spec: &SceneSpec, geom: &ArrayGeometry) -> Result<RenderedScene> {
    spec.validate()?;
    let len = spec.target.signal.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let irs: Option<Vec<Vec<f64>>> =
        spec.reverb.map(|r| (0..mic::COUNT).map(|_| r.impulse_response(&mut rng)).collect());
    let reverberate = |a: MultichannelAudio| -> Result<MultichannelAudio> {
        match &irs {
            None => Ok(a),
            Some(h) => {
                let ch = a.channels().iter().zip(h).map(|(x, h)| fft_convolve(x, h)).collect();
                MultichannelAudio::new(SAMPLE_RATE, ch)
            }
        }
    };

    let mut noise = MultichannelAudio::silence(SAMPLE_RATE, mic::COUNT, len);
    for it in &spec.interferers {
        let mut r = reverberate(render_point_source(geom, it.azimuth, spec.distance, &fit(&it.signal, len))?)?;
        normalize_front(&mut r, -it.snr_offset);
        noise = noise.add(&r)?;
    }
    if let Some(d) = &spec.diffuse {
        let mut r = render_diffuse(geom, &fit(&d.signal, len), d.n_virtual, rng.random())?;
        normalize_front(&mut r, d.level);
        noise = noise.add(&r)?;
    }

    let target = reverberate(render_point_source(geom, spec.target.azimuth, spec.distance, &spec.target.signal)?)?;
    if front_power(&target) == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let current = better_ear_snr(&target, &noise)?;
    let gain = libm::pow(10.0, (spec.better_ear_snr - current) / 20.0);
    let target_image = target.scaled(gain);
    let mixture = target_image.add(&noise)?;
    Ok(RenderedScene {
        target_ref: target_image.select(&[mic::FRONT_LEFT, mic::FRONT_RIGHT]),
        target_image,
        mixture,
        noise_ref: noise,
        target_gain: gain,
    })
}

/// Poles `(radius, frequency in Hz)` of the speech-shaped probe filter.
pub const PROBE_POLES: [(f64, f64); 4] = [(0.95, 250.0), (0.90, 600.0), (0.85, 1400.0), (0.80, 3200.0)];

/// RMS of the generated probe (-26 dBFS).
pub const PROBE_RMS: f64 = 0.05;

/// Denominator `[1, a1, …, a8]` of the all-pole probe filter.
pub fn probe_coefficients() -> [f64; 9] {
    let mut a = [0.0; 9];
    a[0] = 1.0;
    let mut order = 0;
    for &(r, f) in &PROBE_POLES {
        let c1 = -2.0 * r * libm::cos(2.0 * PI * f / SAMPLE_RATE as f64);
        let c2 = r * r;
        for k in (0..=order + 2).rev() {
            let mut v = a[k];
            if k >= 1 {
                v += c1 * a[k - 1];
            }
            if k >= 2 {
                v += c2 * a[k - 2];
            }
            a[k] = v;
        }
        order += 2;
    }
    a
}

/// Speech-shaped noise: white Gaussian noise through the 8-pole envelope,
/// scaled to [`PROBE_RMS`].
pub fn probe_signal(n_samples: usize, seed: u64) -> Vec<f64> {
    let a = probe_coefficients();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = 2048;
    let mut y = vec![0.0; n_samples + warmup];
    for n in 0..y.len() {
        let mut v: f64 = rng.sample(StandardNormal);
        for k in 1..9 {
            if n >= k {
                v -= a[k] * y[n - k];
            }
        }
        y[n] = v;
    }
    let mut y = y.split_off(warmup);
    let p = power(&y);
    if p > 0.0 {
        let g = PROBE_RMS / p.sqrt();
        y.iter_mut().for_each(|v| *v *= g);
    }
    y
}

/// Seeded white Gaussian noise with unit variance.
pub fn white_noise(n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples).map(|_| rng.sample(StandardNormal)).collect()
}
