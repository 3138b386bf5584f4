//! Framing, transforms and delays shared by every processor.

mod fft;
pub(crate) mod fracdelay;
mod stft;

pub use fft::Fft;
pub use fracdelay::{sinc_taps, FractionalDelay};
pub use stft::{analysis_window, SpectralFrame, StftAnalyzer, StftConfig, StftSynthesizer};
