use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{tensor_layout, GcfsConfig, ParamKind, Variant};
use super::layers::{DelayLine, Dense, DsConv, GroupComm, Gru};
use crate::dsp::SpectralFrame;
use crate::error::{Error, FormatError, Result};
use crate::weights::{quantize, QuantTensor, WeightContainer};

/// Complex filters estimated for one frame and one ear.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSet {
    pub filter_channels: usize,
    pub n_bins: usize,
    /// `filter_channels × n_bins`, channel-major.
    pub w: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub r: f64,
}

impl FilterSet {
    pub fn zeros(filter_channels: usize, n_bins: usize, r: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { filter_channels, n_bins, w: vec![z; filter_channels * n_bins], c: vec![z; n_bins], r }
    }

    pub fn w_channel(&self, m: usize) -> &[Complex64] {
        &self.w[m * self.n_bins..(m + 1) * self.n_bins]
    }

    /// True if every real and imaginary part lies in `[-r, r]`.
    pub fn within_range(&self) -> bool {
        self.w.iter().chain(&self.c).all(|z| z.re.abs() <= self.r && z.im.abs() <= self.r)
    }

    /// Filter-and-sum over `channels` followed by the postfilter.
    pub fn apply_into(&self, channels: &[&[Complex64]], out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (m, y) in channels.iter().enumerate() {
                s += y[k] * self.w[m * self.n_bins + k];
            }
            *o = s * self.c[k];
        }
    }
}

/// `Ŝ(f) = C(f) · Σ_m Y(m, f) · W(m, f)` for one frame.
pub fn apply_filters(local: &SpectralFrame, fs: &FilterSet) -> Result<Vec<Complex64>> {
    if local.n_channels() != fs.filter_channels {
        return Err(Error::ChannelMismatch { expected: fs.filter_channels, found: local.n_channels() });
    }
    if local.n_bins() != fs.n_bins {
        return Err(Error::LengthMismatch { expected: fs.n_bins, found: local.n_bins() });
    }
    let chans: Vec<&[Complex64]> = (0..fs.filter_channels).map(|m| local.channel(m)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); fs.n_bins];
    fs.apply_into(&chans, &mut out);
    Ok(out)
}

/// Recurrent and convolutional state of one stream (one ear).
#[derive(Debug, Clone, PartialEq)]
pub struct GcfsState {
    groups: usize,
    hidden: usize,
    ds1: Vec<DelayLine>,
    ds2: Vec<DelayLine>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    work: Workspace,
}

#[derive(Debug, Clone, PartialEq)]
struct Workspace {
    features: Vec<f64>,
    latent: Vec<f64>,
    hidden: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    scratch: Vec<f64>,
    heads: Vec<f64>,
}

impl GcfsState {
    pub fn new(cfg: &GcfsConfig) -> Self {
        let (g, u, p) = (cfg.groups, cfg.hidden, cfg.latent);
        let head = 2 * cfg.filter_channels * cfg.n_bins;
        Self {
            groups: g,
            hidden: u,
            ds1: (0..g).map(|_| DelayLine::new(5, u)).collect(),
            ds2: (0..g).map(|_| DelayLine::new(3, u)).collect(),
            h1: vec![0.0; g * u],
            h2: vec![0.0; g * u],
            work: Workspace {
                features: vec![0.0; cfg.input_size()],
                latent: vec![0.0; p],
                hidden: vec![0.0; g * u],
                a: vec![0.0; u],
                b: vec![0.0; u],
                scratch: vec![0.0; 2 * p + 3 * u],
                heads: vec![0.0; head.max(2 * cfg.n_bins)],
            },
        }
    }

    pub fn reset(&mut self) {
        self.ds1.iter_mut().chain(&mut self.ds2).for_each(DelayLine::reset);
        self.h1.iter_mut().chain(&mut self.h2).for_each(|v| *v = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.h1.iter().chain(&self.h2).all(|v| v.is_finite())
            && self.ds1.iter().chain(&self.ds2).all(DelayLine::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        *self == {
            let mut z = self.clone();
            z.reset();
            z
        }
    }
}

/// Float GCFSnet weights; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GcfsModel {
    cfg: GcfsConfig,
    input_scale: f64,
    r: f64,
    input_fc: Dense,
    conv_fc: Dense,
    ds1: DsConv,
    ds2: DsConv,
    conv_skip: Vec<f64>,
    gc1: GroupComm,
    gru1: Gru,
    gru2: Gru,
    gru_skip: Vec<f64>,
    gc2: GroupComm,
    out_fc: Dense,
    head_w: Dense,
    head_c: Dense,
}

impl GcfsModel {
    /// Builds a model from float tensors given in [`tensor_layout`] order.
    pub fn from_tensors(cfg: GcfsConfig, input_scale: f64, r: f64, tensors: Vec<Vec<f64>>) -> Result<Self> {
        cfg.validate()?;
        let layout = tensor_layout(&cfg);
        if tensors.len() != layout.len() {
            return Err(FormatError::TensorMismatch(alloc::format!(
                "expected {} tensors, got {}",
                layout.len(),
                tensors.len()
            ))
            .into());
        }
        for (spec, t) in layout.iter().zip(&tensors) {
            if spec.numel() != t.len() {
                return Err(FormatError::TensorMismatch(alloc::format!(
                    "{} has {} values, expected {}",
                    spec.name,
                    t.len(),
                    spec.numel()
                ))
                .into());
            }
        }
        if !(r > 0.0 && r.is_finite() && input_scale.is_finite()) {
            return Err(Error::InvalidConfig("filter range must be positive and scalars finite".into()));
        }
        let (b, p, u, pg, g) = (cfg.input_size(), cfg.latent, cfg.hidden, cfg.group_size(), cfg.groups);
        let mut it = tensors.into_iter();
        let mut next = || it.next().expect("count checked");
        let input_fc = Dense::new(b, p, next(), next());
        let conv_fc = Dense::new(pg, u, next(), next());
        let ds1_dw = next();
        let ds1 = DsConv::new(u, 5, ds1_dw, Dense::new(u, u, next(), next()));
        let ds2_dw = next();
        let ds2 = DsConv::new(u, 3, ds2_dw, Dense::new(u, u, next(), next()));
        let conv_skip = next();
        let gc1 = GroupComm::new(g, Dense::new(u, pg, next(), next()), Dense::new(p, p, next(), next()), Dense::new(pg, u, next(), next()));
        let gru1 = Gru::new(u, next(), next(), next());
        let gru2 = Gru::new(u, next(), next(), next());
        let gru_skip = next();
        let gc2 = GroupComm::new(g, Dense::new(u, pg, next(), next()), Dense::new(p, p, next(), next()), Dense::new(pg, u, next(), next()));
        let out_fc = Dense::new(u, pg, next(), next());
        let head_w = Dense::new(p, 2 * cfg.filter_channels * cfg.n_bins, next(), next());
        let head_c = Dense::new(p, 2 * cfg.n_bins, next(), next());
        Ok(Self {
            cfg,
            input_scale,
            r,
            input_fc,
            conv_fc,
            ds1,
            ds2,
            conv_skip,
            gc1,
            gru1,
            gru2,
            gru_skip,
            gc2,
            out_fc,
            head_w,
            head_c,
        })
    }

    /// Tensors in [`tensor_layout`] order.
    pub fn tensors(&self) -> Vec<Vec<f64>> {
        let dense = |d: &Dense| [d.weight.clone(), d.bias.clone()];
        let gc = |g: &GroupComm| {
            let mut v = Vec::new();
            v.extend(dense(&g.down));
            v.extend(dense(&g.mix));
            v.extend(dense(&g.up));
            v
        };
        let gru = |g: &Gru| [g.w_ih.clone(), g.w_hh.clone(), g.bias.clone()];
        let mut out = Vec::new();
        out.extend(dense(&self.input_fc));
        out.extend(dense(&self.conv_fc));
        for ds in [&self.ds1, &self.ds2] {
            out.push(ds.depthwise.clone());
            out.extend(dense(&ds.pointwise));
        }
        out.push(self.conv_skip.clone());
        out.extend(gc(&self.gc1));
        out.extend(gru(&self.gru1));
        out.extend(gru(&self.gru2));
        out.push(self.gru_skip.clone());
        out.extend(gc(&self.gc2));
        out.extend(dense(&self.out_fc));
        out.extend(dense(&self.head_w));
        out.extend(dense(&self.head_c));
        out
    }

    /// All-zero weights; the network then outputs zero filters.
    pub fn zeros(cfg: GcfsConfig) -> Result<Self> {
        let tensors = tensor_layout(&cfg).iter().map(|s| vec![0.0; s.numel()]).collect();
        Self::from_tensors(cfg, 1.0, 2.0, tensors)
    }

    /// Seeded random initialization inside the quantizable range `[-1, 1]`.
    ///
    /// Weights are uniform with a Glorot-style bound, biases uniform in
    /// ±0.1; the input scale starts at 1 and `r` at 2.
    pub fn random(cfg: GcfsConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = tensor_layout(&cfg)
            .iter()
            .map(|s| {
                let bound = match s.kind {
                    ParamKind::Bias => 0.1,
                    ParamKind::Weight => {
                        let fan_in = if s.shape.len() == 2 { s.shape[1] } else { 1 };
                        libm::sqrt(3.0 / fan_in as f64).min(1.0)
                    }
                };
                (0..s.numel()).map(|_| rng.random_range(-bound..=bound)).collect()
            })
            .collect();
        Self::from_tensors(cfg, 1.0, 2.0, tensors)
    }

    /// Dequantizes a container; `expected` rejects the wrong variant.
    pub fn from_container(wc: &WeightContainer, expected: Option<Variant>) -> Result<Self> {
        if let Some(v) = expected {
            if wc.config.variant != v {
                return Err(FormatError::ConfigMismatch {
                    expected: v.as_str().into(),
                    found: wc.config.variant.as_str().into(),
                }
                .into());
            }
        }
        wc.validate()?;
        let tensors = wc.tensors.iter().map(QuantTensor::dequantize).collect();
        Self::from_tensors(wc.config.clone(), wc.input_scale as f64, wc.r as f64, tensors)
    }

    /// Quantizes the weights (int8) and biases (int16) into a container.
    /// Returns the container and the number of values that were clamped.
    pub fn to_container(&self) -> (WeightContainer, usize) {
        let mut clamped = 0;
        let tensors = tensor_layout(&self.cfg)
            .into_iter()
            .zip(self.tensors())
            .map(|(spec, values)| {
                let dtype = crate::weights::QuantDtype::for_kind(spec.kind);
                let (data, n) = quantize(&values, dtype);
                clamped += n;
                QuantTensor { name: spec.name, shape: spec.shape, dtype, data }
            })
            .collect();
        let wc = WeightContainer {
            config: self.cfg.clone(),
            input_scale: self.input_scale as f32,
            r: self.r as f32,
            tensors,
        };
        (wc, clamped)
    }

    pub fn config(&self) -> &GcfsConfig {
        &self.cfg
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn new_state(&self) -> GcfsState {
        GcfsState::new(&self.cfg)
    }

    fn check_state(&self, state: &GcfsState) -> Result<()> {
        if state.groups != self.cfg.groups
            || state.hidden != self.cfg.hidden
            || state.work.features.len() != self.cfg.input_size()
        {
            return Err(Error::InvalidConfig("state was created for a different network config".into()));
        }
        Ok(())
    }

    /// Runs one frame. `features` holds the feature channels already in
    /// the configured channel order.
    pub fn infer_frame(&self, state: &mut GcfsState, features: &SpectralFrame) -> Result<FilterSet> {
        self.check_state(state)?;
        if features.n_channels() != self.cfg.feature_channels() {
            return Err(Error::ChannelMismatch { expected: self.cfg.feature_channels(), found: features.n_channels() });
        }
        if features.n_bins() != self.cfg.n_bins {
            return Err(Error::LengthMismatch { expected: self.cfg.n_bins, found: features.n_bins() });
        }
        let chans: Vec<&[Complex64]> = (0..features.n_channels()).map(|m| features.channel(m)).collect();
        let mut out = FilterSet::zeros(self.cfg.filter_channels, self.cfg.n_bins, self.r);
        self.infer_channels(state, &chans, &mut out);
        Ok(out)
    }

    /// Runs a sequence of frames from a fresh state.
    pub fn infer_batch(&self, frames: &[SpectralFrame]) -> Result<Vec<FilterSet>> {
        let mut state = self.new_state();
        frames.iter().map(|f| self.infer_frame(&mut state, f)).collect()
    }

    /// Allocation-free inference on borrowed channel spectra.
    pub(crate) fn infer_channels(&self, state: &mut GcfsState, chans: &[&[Complex64]], out: &mut FilterSet) {
        let cfg = &self.cfg;
        let (f, u, pg, g) = (cfg.n_bins, cfg.hidden, cfg.group_size(), cfg.groups);
        let w = &mut state.work;

        // features: per channel, all real parts then all imaginary parts
        for (m, ch) in chans.iter().enumerate() {
            let base = m * 2 * f;
            for (k, z) in ch.iter().enumerate() {
                w.features[base + k] = self.input_scale * z.re;
                w.features[base + f + k] = self.input_scale * z.im;
            }
        }
        self.input_fc.forward_tanh(&w.features, &mut w.latent);

        // conv module, shared across groups
        for gi in 0..g {
            let x = &mut w.a;
            self.conv_fc.forward_tanh(&w.latent[gi * pg..(gi + 1) * pg], x);
            let (s1, rest) = w.scratch.split_at_mut(u);
            let y1 = &mut rest[..u];
            self.ds1.step(&mut state.ds1[gi], x, s1, y1);
            let hid = &mut w.hidden[gi * u..(gi + 1) * u];
            self.ds2.step(&mut state.ds2[gi], y1, s1, hid);
            for c in 0..u {
                hid[c] += self.conv_skip[c] * x[c];
            }
        }

        self.gc1.forward(&mut w.hidden, &mut w.scratch);

        // two stacked GRUs with a scaled skip around both
        for gi in 0..g {
            let x = &w.hidden[gi * u..(gi + 1) * u];
            let h1 = &mut state.h1[gi * u..(gi + 1) * u];
            self.gru1.step(h1, x, &mut w.scratch);
            let h2 = &mut state.h2[gi * u..(gi + 1) * u];
            self.gru2.step(h2, h1, &mut w.scratch);
            for c in 0..u {
                w.b[c] = h2[c] + self.gru_skip[c] * x[c];
            }
            w.hidden[gi * u..(gi + 1) * u].copy_from_slice(&w.b);
        }

        self.gc2.forward(&mut w.hidden, &mut w.scratch);

        for gi in 0..g {
            self.out_fc.forward_tanh(&w.hidden[gi * u..(gi + 1) * u], &mut w.latent[gi * pg..(gi + 1) * pg]);
        }

        let fc = cfg.filter_channels;
        let heads = &mut w.heads[..2 * fc * f];
        self.head_w.forward_tanh(&w.latent, heads);
        for m in 0..fc {
            for k in 0..f {
                let base = m * 2 * f;
                out.w[m * f + k] = Complex64::new(self.r * heads[base + k], self.r * heads[base + f + k]);
            }
        }
        let heads = &mut w.heads[..2 * f];
        self.head_c.forward_tanh(&w.latent, heads);
        for k in 0..f {
            out.c[k] = Complex64::new(self.r * heads[k], self.r * heads[f + k]);
        }
        out.r = self.r;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_frame(rng: &mut ChaCha8Rng, channels: usize, scale: f64) -> SpectralFrame {
        let mut f = SpectralFrame::zeros(channels, 65);
        for m in 0..channels {
            for z in f.channel_mut(m) {
                *z = c(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
            }
        }
        f
    }

    #[test]
    fn zero_model_outputs_zero_filters() {
        let model = GcfsModel::zeros(GcfsConfig::binaural()).unwrap();
        let mut st = model.new_state();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fs = model.infer_frame(&mut st, &random_frame(&mut rng, 4, 10.0)).unwrap();
        assert!(fs.w.iter().chain(&fs.c).all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn filters_stay_in_range() {
        let model = GcfsModel::random(GcfsConfig::monaural(), 3).unwrap();
        let mut st = model.new_state();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let fs = model.infer_frame(&mut st, &random_frame(&mut rng, 2, 50.0)).unwrap();
            assert!(fs.within_range());
            assert_eq!(fs.r, 2.0);
        }
        assert!(st.is_finite());
    }

    #[test]
    fn causal_and_streaming_equals_batch() {
        let model = GcfsModel::random(GcfsConfig::binaural(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frames: Vec<_> = (0..12).map(|_| random_frame(&mut rng, 4, 3.0)).collect();
        let batch = model.infer_batch(&frames).unwrap();
        let mut st = model.new_state();
        for (f, b) in frames.iter().zip(&batch) {
            assert_eq!(&model.infer_frame(&mut st, f).unwrap(), b);
        }
        let mut pert = frames.clone();
        for f in &mut pert[7..] {
            *f = random_frame(&mut rng, 4, 3.0);
        }
        let moved = model.infer_batch(&pert).unwrap();
        assert_eq!(batch[..7], moved[..7]);
        assert_ne!(batch[7], moved[7]);
    }

    #[test]
    fn reset_zeroes_state() {
        let model = GcfsModel::random(GcfsConfig::binaural(), 4).unwrap();
        let mut st = model.new_state();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        model.infer_frame(&mut st, &random_frame(&mut rng, 4, 1.0)).unwrap();
        assert!(!st.is_zero());
        st.reset();
        assert!(st.is_zero());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let model = GcfsModel::random(GcfsConfig::binaural(), 4).unwrap();
        let mut st = model.new_state();
        assert!(model.infer_frame(&mut st, &SpectralFrame::zeros(2, 65)).is_err());
        let mut mono_state = GcfsState::new(&GcfsConfig::monaural());
        assert!(model.infer_frame(&mut mono_state, &SpectralFrame::zeros(4, 65)).is_err());
    }

    #[test]
    fn apply_filters_examples() {
        let mut local = SpectralFrame::zeros(2, 65);
        for k in 0..65 {
            local.channel_mut(0)[k] = c(k as f64, -0.5);
            local.channel_mut(1)[k] = c(1.0, k as f64 * 0.1);
        }
        let mut fs = FilterSet::zeros(2, 65, 2.0);
        fs.w[..65].iter_mut().for_each(|z| *z = c(1.0, 0.0));
        fs.c.iter_mut().for_each(|z| *z = c(1.0, 0.0));
        assert_eq!(apply_filters(&local, &fs).unwrap(), local.channel(0));

        let zero_w = FilterSet { w: vec![c(0.0, 0.0); 130], c: vec![c(1.7, -0.3); 65], ..fs.clone() };
        assert!(apply_filters(&local, &zero_w).unwrap().iter().all(|z| *z == c(0.0, 0.0)));

        // two coherent unit channels, W = 0.5 each, C = 2
        let mut coh = SpectralFrame::zeros(2, 65);
        for m in 0..2 {
            coh.channel_mut(m).iter_mut().for_each(|z| *z = c(0.6, 0.8));
        }
        let half = FilterSet { w: vec![c(0.5, 0.0); 130], c: vec![c(2.0, 0.0); 65], ..fs.clone() };
        for z in apply_filters(&coh, &half).unwrap() {
            assert!((z - c(1.2, 1.6)).norm() < 1e-15);
        }
        assert!(apply_filters(&SpectralFrame::zeros(3, 65), &fs).is_err());
    }

    #[test]
    fn container_round_trip_dequantizes() {
        let model = GcfsModel::random(GcfsConfig::monaural(), 9).unwrap();
        let (wc, clamped) = model.to_container();
        assert_eq!(clamped, 0);
        let back = GcfsModel::from_container(&wc, Some(Variant::Monaural)).unwrap();
        for (a, b) in model.tensors().iter().flatten().zip(back.tensors().iter().flatten()) {
            assert!((a - b).abs() <= 0.5 / 127.0 + 1e-12);
        }
        assert!(matches!(
            GcfsModel::from_container(&wc, Some(Variant::Binaural)),
            Err(Error::Format(FormatError::ConfigMismatch { .. }))
        ));
    }
}
