//! Bilateral adaptive differential microphone.
//!
//! Each side combines its front and back microphone into a forward and a
//! backward facing cardioid and subtracts a scaled backward cardioid,
//! `y = c_F − β·c_B`. β is adapted by normalized gradient descent on the
//! output power and clamped to `[0, 1]`, which keeps the null in the rear
//! hemisphere. A one-pole lowpass undoes the 6 dB/octave tilt of the
//! differential array.

use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dsp::FractionalDelay;
use crate::engine::FrameProcessor;
use crate::error::{Error, Result};
use crate::{mic, Ear, SPEED_OF_SOUND};

/// Half-width of the 32-tap interpolators.
const FD_HALF_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmConfig {
    pub mic_spacing: f64,
    pub sample_rate: f64,
    pub beta_init: f64,
    pub step_size: f64,
    pub power_smoothing: f64,
    pub epsilon: f64,
    pub eq_cutoff: f64,
    pub adapt: bool,
}

impl Default for AdmConfig {
    fn default() -> Self {
        Self {
            mic_spacing: 0.011,
            sample_rate: 16_000.0,
            beta_init: 0.5,
            step_size: 0.01,
            power_smoothing: 0.999,
            epsilon: 1e-8,
            eq_cutoff: 100.0,
            adapt: true,
        }
    }
}

impl AdmConfig {
    /// Inter-microphone travel time in samples.
    pub fn internal_delay(&self) -> f64 {
        self.mic_spacing / SPEED_OF_SOUND * self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.mic_spacing > 0.0) {
            return bad("microphone spacing must be positive");
        }
        if self.internal_delay() > 10.0 {
            return bad("microphone spacing implies an internal delay above 10 samples");
        }
        if !(0.0..=1.0).contains(&self.beta_init) {
            return bad("beta_init must lie in [0, 1]");
        }
        if !(self.step_size > 0.0) {
            return bad("step size must be positive");
        }
        if !(self.power_smoothing > 0.0 && self.power_smoothing < 1.0) {
            return bad("power smoothing must lie in (0, 1)");
        }
        if !(self.eq_cutoff > 0.0 && self.eq_cutoff < self.sample_rate / 2.0) {
            return bad("equalizer cutoff must lie in (0, fs/2)");
        }
        Ok(())
    }
}

/// Low-frequency null direction of `c_F − β·c_B`, in degrees.
pub fn adm_null_angle(beta: f64) -> f64 {
    libm::acos((beta - 1.0) / (beta + 1.0)) * 180.0 / PI
}

/// One side of the bilateral ADM.
#[derive(Debug, Clone)]
pub struct AdmSide {
    cfg: AdmConfig,
    front_now: FractionalDelay,
    front_late: FractionalDelay,
    back_now: FractionalDelay,
    back_late: FractionalDelay,
    beta: f64,
    power: f64,
    eq_pole: f64,
    eq_gain: f64,
    eq_state: f64,
    last_raw: f64,
}

impl AdmSide {
    pub fn new(cfg: AdmConfig) -> Result<Self> {
        cfg.validate()?;
        let t = cfg.internal_delay();
        let bulk = (FD_HALF_WIDTH - 1) as f64;
        let fd = |d: f64| FractionalDelay::new(d, FD_HALF_WIDTH).expect("delay covers the filter support");
        // b·2 sin(ωT) / |1 − a e^{−jω}| → 1 in the passband
        let eq_pole = (-2.0 * PI * cfg.eq_cutoff / cfg.sample_rate).exp();
        let eq_gain = 1.0 / (2.0 * t);
        Ok(Self {
            front_now: fd(bulk),
            front_late: fd(bulk + t),
            back_now: fd(bulk),
            back_late: fd(bulk + t),
            beta: cfg.beta_init,
            power: 0.0,
            eq_pole,
            eq_gain,
            eq_state: 0.0,
            last_raw: 0.0,
            cfg,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta.clamp(0.0, 1.0);
    }

    pub fn set_adaptation(&mut self, on: bool) {
        self.cfg.adapt = on;
    }

    /// Unequalized output of the most recent step.
    pub fn last_raw(&self) -> f64 {
        self.last_raw
    }

    pub fn latency(&self) -> usize {
        FD_HALF_WIDTH - 1
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.cfg.clone()).expect("config validated at construction");
    }

    pub fn step(&mut self, front: f64, back: f64) -> f64 {
        let fwd = self.front_now.process(front) - self.back_late.process(back);
        let bwd = self.back_now.process(back) - self.front_late.process(front);
        let y = fwd - self.beta * bwd;
        if self.cfg.adapt {
            let a = self.cfg.power_smoothing;
            self.power = a * self.power + (1.0 - a) * bwd * bwd;
            let update = self.cfg.step_size * y * bwd / (self.cfg.epsilon + self.power);
            self.beta = (self.beta + update).clamp(0.0, 1.0);
        }
        self.last_raw = y;
        self.eq_state = self.eq_pole * self.eq_state + self.eq_gain * y;
        self.eq_state
    }
}

/// Two independent ADM instances, one per ear.
#[derive(Debug, Clone)]
pub struct AdmProcessor {
    sides: [AdmSide; 2],
}

impl AdmProcessor {
    pub fn new(cfg: AdmConfig) -> Result<Self> {
        Ok(Self { sides: [AdmSide::new(cfg.clone())?, AdmSide::new(cfg)?] })
    }

    pub fn side(&self, ear: Ear) -> &AdmSide {
        &self.sides[ear.index()]
    }

    pub fn side_mut(&mut self, ear: Ear) -> &mut AdmSide {
        &mut self.sides[ear.index()]
    }
}

impl FrameProcessor for AdmProcessor {
    fn name(&self) -> &str {
        "adm"
    }

    fn n_in_channels(&self) -> usize {
        mic::COUNT
    }

    fn latency(&self) -> usize {
        self.sides[0].latency()
    }

    fn reset(&mut self) {
        self.sides.iter_mut().for_each(AdmSide::reset);
    }

    fn process_block(&mut self, input: &[f64], output: &mut [f64]) {
        let len = input.len() / mic::COUNT;
        for ear in Ear::BOTH {
            let (f, b) = ear.ipsilateral();
            let side = &mut self.sides[ear.index()];
            for i in 0..len {
                output[ear.index() * len + i] = side.step(input[f * len + i], input[b * len + i]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn internal_delay_value() {
        let t = AdmConfig::default().internal_delay();
        assert!((t - 0.011 / 343.0 * 16000.0).abs() < 1e-12);
        assert!((t - 0.513).abs() < 1e-3);
    }

    #[test]
    fn null_angles() {
        assert!((adm_null_angle(0.0) - 180.0).abs() < 1e-9);
        assert!((adm_null_angle(1.0) - 90.0).abs() < 1e-9);
        assert!((adm_null_angle(1.0 / 3.0) - 120.0).abs() < 1e-9);
    }

    #[test]
    fn config_errors() {
        let bad_beta = AdmConfig { beta_init: 1.5, ..Default::default() };
        assert!(AdmProcessor::new(bad_beta).is_err());
        let far = AdmConfig { mic_spacing: 0.3, ..Default::default() };
        assert!(AdmProcessor::new(far).is_err());
        assert!(AdmProcessor::new(AdmConfig { mic_spacing: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn latency_is_interpolator_delay() {
        let p = AdmProcessor::new(AdmConfig::default()).unwrap();
        assert_eq!(p.latency(), 15);
    }

    #[test]
    fn silence_keeps_beta() {
        let mut s = AdmSide::new(AdmConfig::default()).unwrap();
        for _ in 0..1000 {
            assert_eq!(s.step(0.0, 0.0), 0.0);
        }
        assert_eq!(s.beta(), 0.5);
    }

    #[test]
    fn beta_stays_clamped_on_wild_input() {
        let mut s = AdmSide::new(AdmConfig { step_size: 0.5, ..Default::default() }).unwrap();
        let mut x = 0.123f64;
        for _ in 0..20000 {
            x = (x * 3.9 * (1.0 - x)).clamp(1e-6, 1.0 - 1e-6);
            s.step(x * 2.0 - 1.0, (x * 7.0).sin());
            assert!((0.0..=1.0).contains(&s.beta()));
            let angle = adm_null_angle(s.beta());
            assert!((90.0..=180.0).contains(&angle));
        }
    }
}
