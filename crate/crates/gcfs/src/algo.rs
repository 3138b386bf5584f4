//! Processor selection shared by the CLI subcommands.

use std::path::PathBuf;
use std::sync::Arc;

use clap::ValueEnum;
use gcfs_core::adm::{AdmConfig, AdmProcessor};
use gcfs_core::dsp::StftConfig;
use gcfs_core::engine::{Bypass, FrameProcessor, GainProcessor};
use gcfs_core::gcfsnet::{GcfsConfig, GcfsModel, GcfsProcessor, Variant};
use gcfs_core::geometry::ArrayGeometry;
use gcfs_core::mvdr::{MvdrConfig, MvdrProcessor};

use crate::atf::read_atf;
use crate::error::{AppError, AppResult};
use crate::weights_file::load_model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Bypass,
    Gain,
    Adm,
    Mvdr,
    #[value(name = "gcfs-m")]
    GcfsM,
    #[value(name = "gcfs-b")]
    GcfsB,
}

impl Algo {
    pub fn variant(self) -> Option<Variant> {
        match self {
            Algo::GcfsM => Some(Variant::Monaural),
            Algo::GcfsB => Some(Variant::Binaural),
            _ => None,
        }
    }

    /// Adaptation time the beam-pattern harness discards.
    pub fn warmup_secs(self) -> f64 {
        if self == Algo::Adm { 2.0 } else { 0.0 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AlgoOptions {
    pub gain_db: f64,
    pub weights: Option<PathBuf>,
    /// Random GCFSnet weights from this seed when no file is given.
    pub random_weights: Option<u64>,
    pub atf: Option<PathBuf>,
    pub geometry: ArrayGeometry,
}

pub fn build(algo: Algo, opts: &AlgoOptions) -> AppResult<Box<dyn FrameProcessor>> {
    Ok(match algo {
        Algo::Bypass => Box::new(Bypass::new()),
        Algo::Gain => Box::new(GainProcessor::new(opts.gain_db)?),
        Algo::Adm => {
            let spacing = opts.geometry.distance(gcfs_core::mic::FRONT_LEFT, gcfs_core::mic::BACK_LEFT);
            Box::new(AdmProcessor::new(AdmConfig { mic_spacing: spacing, ..AdmConfig::default() })?)
        }
        Algo::Mvdr => {
            let cfg = MvdrConfig::default();
            match &opts.atf {
                Some(p) => {
                    let atf = read_atf(p, StftConfig::hearing_aid().n_bins)?;
                    Box::new(MvdrProcessor::with_steering(&opts.geometry, &cfg, &atf)?)
                }
                None => Box::new(MvdrProcessor::new(&opts.geometry, &cfg)?),
            }
        }
        Algo::GcfsM | Algo::GcfsB => {
            let variant = algo.variant().expect("gcfs algorithm");
            let model = match (&opts.weights, opts.random_weights) {
                (Some(p), _) => load_model(p, variant)?,
                (None, Some(seed)) => Arc::new(GcfsModel::random(GcfsConfig::new(variant), seed)?),
                (None, None) => {
                    return Err(AppError::Usage(format!(
                        "--algo {} requires --weights <file.gcfs>",
                        algo.to_possible_value().expect("named").get_name()
                    )))
                }
            };
            Box::new(GcfsProcessor::new(model)?)
        }
    })
}
