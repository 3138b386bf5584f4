use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::config::MicRole;
use super::model::{FilterSet, GcfsModel, GcfsState};
use crate::dsp::{SpectralFrame, StftAnalyzer, StftConfig, StftSynthesizer};
use crate::engine::{FrameProcessor, HOP};
use crate::error::{Error, Result};
use crate::{mic, Ear};

/// Microphone index playing `role` for `ear`.
pub fn mic_for_role(ear: Ear, role: MicRole) -> usize {
    match role {
        MicRole::FrontIpsilateral => ear.ipsilateral().0,
        MicRole::BackIpsilateral => ear.ipsilateral().1,
        MicRole::FrontContralateral => ear.contralateral().0,
        MicRole::BackContralateral => ear.contralateral().1,
    }
}

/// Streaming GCFSnet enhancement for both ears.
///
/// One model is shared by both ears; the right ear sees the mirrored
/// channel order. Each ear keeps its own recurrent state.
#[derive(Debug, Clone)]
pub struct GcfsProcessor {
    models: [Arc<GcfsModel>; 2],
    states: [GcfsState; 2],
    feature_mics: [Vec<usize>; 2],
    filter_mics: [Vec<usize>; 2],
    analyzer: StftAnalyzer,
    frame: SpectralFrame,
    filters: FilterSet,
    synth: [StftSynthesizer; 2],
    out: Vec<Complex64>,
    name: &'static str,
}

impl GcfsProcessor {
    pub fn new(model: Arc<GcfsModel>) -> Result<Self> {
        Self::with_models(model.clone(), model)
    }

    /// Separate models per ear; both must share a config.
    pub fn with_models(left: Arc<GcfsModel>, right: Arc<GcfsModel>) -> Result<Self> {
        let cfg = left.config().clone();
        if right.config() != &cfg {
            return Err(Error::InvalidConfig("left and right models differ in config".into()));
        }
        let stft = StftConfig::hearing_aid();
        if stft.n_bins != cfg.n_bins {
            return Err(Error::InvalidConfig(alloc::format!(
                "model expects {} bins, the STFT provides {}",
                cfg.n_bins,
                stft.n_bins
            )));
        }
        let per_ear = |ear: Ear| -> (Vec<usize>, Vec<usize>) {
            let feats = cfg.channel_order().iter().map(|&r| mic_for_role(ear, r)).collect();
            let (f, b) = ear.ipsilateral();
            (feats, vec![f, b])
        };
        let (fl, wl) = per_ear(Ear::Left);
        let (fr, wr) = per_ear(Ear::Right);
        let name = match cfg.variant {
            super::Variant::Monaural => "gcfs-m",
            super::Variant::Binaural => "gcfs-b",
        };
        Ok(Self {
            states: [left.new_state(), right.new_state()],
            filters: FilterSet::zeros(cfg.filter_channels, cfg.n_bins, left.r()),
            models: [left, right],
            feature_mics: [fl, fr],
            filter_mics: [wl, wr],
            analyzer: StftAnalyzer::new(stft, mic::COUNT)?,
            frame: SpectralFrame::zeros(mic::COUNT, stft.n_bins),
            synth: [StftSynthesizer::new(stft)?, StftSynthesizer::new(stft)?],
            out: vec![Complex64::new(0.0, 0.0); stft.n_bins],
            name,
        })
    }

    pub fn model(&self, ear: Ear) -> &GcfsModel {
        &self.models[ear.index()]
    }

    pub fn state(&self, ear: Ear) -> &GcfsState {
        &self.states[ear.index()]
    }

    /// Filters estimated for the most recent frame (last ear processed).
    pub fn last_filters(&self) -> &FilterSet {
        &self.filters
    }
}

impl FrameProcessor for GcfsProcessor {
    fn name(&self) -> &str {
        self.name
    }

    fn n_in_channels(&self) -> usize {
        mic::COUNT
    }

    fn latency(&self) -> usize {
        self.synth[0].latency()
    }

    fn reset(&mut self) {
        self.analyzer.reset();
        self.states.iter_mut().for_each(GcfsState::reset);
        self.synth.iter_mut().for_each(StftSynthesizer::reset);
    }

    fn process_block(&mut self, input: &[f64], output: &mut [f64]) {
        self.analyzer.analyze_into(input, &mut self.frame).expect("block shape checked by driver");
        for ear in 0..2 {
            let feats: [&[Complex64]; 4] = core::array::from_fn(|i| {
                let m = self.feature_mics[ear].get(i).copied().unwrap_or(0);
                self.frame.channel(m)
            });
            let n_feat = self.feature_mics[ear].len();
            self.models[ear].infer_channels(&mut self.states[ear], &feats[..n_feat], &mut self.filters);
            let local = [self.frame.channel(self.filter_mics[ear][0]), self.frame.channel(self.filter_mics[ear][1])];
            self.filters.apply_into(&local, &mut self.out);
            self.synth[ear]
                .synthesize(&self.out, &mut output[ear * HOP..(ear + 1) * HOP])
                .expect("fixed frame size");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::MultichannelAudio;
    use crate::engine::process_stream;
    use crate::gcfsnet::GcfsConfig;
    use crate::scene::white_noise;

    fn input(len: usize, seed: u64) -> MultichannelAudio {
        let ch = (0..4).map(|m| white_noise(len, seed + m).into_iter().map(|v| 0.1 * v).collect()).collect();
        MultichannelAudio::new(16000, ch).unwrap()
    }

    fn proc(cfg: GcfsConfig) -> GcfsProcessor {
        GcfsProcessor::new(Arc::new(GcfsModel::random(cfg, 11).unwrap())).unwrap()
    }

    #[test]
    fn channel_roles() {
        assert_eq!(mic_for_role(Ear::Right, MicRole::FrontIpsilateral), mic::FRONT_RIGHT);
        assert_eq!(mic_for_role(Ear::Right, MicRole::BackContralateral), mic::BACK_LEFT);
        assert_eq!(mic_for_role(Ear::Left, MicRole::FrontContralateral), mic::FRONT_RIGHT);
    }

    #[test]
    fn mirrored_input_swaps_ears() {
        let mut p = proc(GcfsConfig::binaural());
        let x = input(3200, 1);
        let mirrored = x.select(&[1, 0, 3, 2]);
        let a = process_stream(&mut p, &x).unwrap().audio;
        p.reset();
        let b = process_stream(&mut p, &mirrored).unwrap().audio;
        for (u, v) in a.channel(0).iter().zip(b.channel(1)) {
            assert!((u - v).abs() < 1e-12);
        }
        for (u, v) in a.channel(1).iter().zip(b.channel(0)) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn monaural_ignores_contralateral_mics() {
        let mut p = proc(GcfsConfig::monaural());
        let x = input(3200, 2);
        let mut y = x.clone();
        y.channel_mut(mic::FRONT_RIGHT).iter_mut().for_each(|v| *v = -*v * 3.0);
        y.channel_mut(mic::BACK_RIGHT).iter_mut().for_each(|v| *v = 0.0);
        let a = process_stream(&mut p, &x).unwrap().audio;
        p.reset();
        let b = process_stream(&mut p, &y).unwrap().audio;
        assert_eq!(a.channel(0), b.channel(0));
        assert_ne!(a.channel(1), b.channel(1));
    }

    #[test]
    fn reset_restores_initial_behaviour() {
        let mut p = proc(GcfsConfig::binaural());
        let x = input(1600, 3);
        let a = process_stream(&mut p, &x).unwrap().audio;
        p.reset();
        assert!(p.state(Ear::Left).is_zero());
        let b = process_stream(&mut p, &x).unwrap().audio;
        assert_eq!(a, b);
        assert_eq!(p.latency(), 64);
        assert_eq!(p.name(), "gcfs-b");
    }

    #[test]
    fn mismatched_models_rejected() {
        let l = Arc::new(GcfsModel::zeros(GcfsConfig::monaural()).unwrap());
        let r = Arc::new(GcfsModel::zeros(GcfsConfig::binaural()).unwrap());
        assert!(GcfsProcessor::with_models(l, r).is_err());
    }
}
