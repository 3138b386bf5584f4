//! Host-side companion to `gcfs-core`: WAV and weight files, scene specs,
//! real-time benchmarking and the `gcfs` command line.

pub mod algo;
pub mod atf;
pub mod bench;
pub mod cli;
pub mod error;
pub mod scene_file;
pub mod wav;
pub mod weights_file;

pub use error::{AppError, AppResult};
