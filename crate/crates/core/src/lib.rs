//! Real-time multichannel speech enhancement for a four-microphone binaural
//! hearing-aid array.
//!
//! The crate is `no_std` (it needs `alloc`) so the same processing code can
//! run on a host, inside a plugin, or on an embedded target. It contains:
//!
//! * [`dsp`]: 4 ms / 2 ms streaming STFT with a 128-point transform,
//!   fractional delays and window helpers.
//! * [`engine`]: the [`FrameProcessor`](engine::FrameProcessor) contract,
//!   the streaming driver and the trivial bypass / gain processors.
//! * [`adm`]: bilateral adaptive differential microphones.
//! * [`mvdr`]: fixed binaural MVDR beamformer under a diffuse noise model.
//! * [`gcfsnet`]: inference for the group communication filter-and-sum
//!   network, estimating complex spatial filters and a postfilter per frame.
//! * [`weights`]: int8/int16 quantization and the `.gcfs` container codec.
//! * [`scene`]: free-field scene rendering and SNR-controlled mixing.
//! * [`eval`]: SI-SDR, energy attenuation, beam patterns and SNR sweeps.
//!
//! Microphone channels are always ordered front-left, front-right,
//! back-left, back-right; every processor emits two channels (left ear,
//! right ear).
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adm;
pub mod audio;
pub mod dsp;
pub mod engine;
pub mod error;
pub mod eval;
pub mod gcfsnet;
pub mod geometry;
pub mod mvdr;
pub mod scene;
pub mod weights;

pub use audio::MultichannelAudio;
pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Sample rate of the whole processing path.
pub const SAMPLE_RATE: u32 = 16_000;

/// Speed of sound used for all array computations, in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Microphone channel indices in the canonical 4-channel layout.
pub mod mic {
    pub const FRONT_LEFT: usize = 0;
    pub const FRONT_RIGHT: usize = 1;
    pub const BACK_LEFT: usize = 2;
    pub const BACK_RIGHT: usize = 3;
    pub const COUNT: usize = 4;
}

/// Output ear. Left is channel 0 of every processor output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn index(self) -> usize {
        match self {
            Ear::Left => 0,
            Ear::Right => 1,
        }
    }

    /// Front and back microphone on this ear's side.
    pub fn ipsilateral(self) -> (usize, usize) {
        match self {
            Ear::Left => (mic::FRONT_LEFT, mic::BACK_LEFT),
            Ear::Right => (mic::FRONT_RIGHT, mic::BACK_RIGHT),
        }
    }

    /// Front and back microphone on the opposite side.
    pub fn contralateral(self) -> (usize, usize) {
        match self {
            Ear::Left => Ear::Right.ipsilateral(),
            Ear::Right => Ear::Left.ipsilateral(),
        }
    }
}
