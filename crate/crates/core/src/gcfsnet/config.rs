use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Features from the two ipsilateral microphones only.
    Monaural,
    /// Features from all four microphones (ideal binaural link).
    Binaural,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Monaural => "monaural",
            Variant::Binaural => "binaural",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "monaural" | "m" => Some(Variant::Monaural),
            "binaural" | "b" => Some(Variant::Binaural),
            _ => None,
        }
    }
}

/// Microphone role relative to the ear being processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MicRole {
    FrontIpsilateral,
    FrontContralateral,
    BackIpsilateral,
    BackContralateral,
}

impl MicRole {
    pub fn as_str(self) -> &'static str {
        match self {
            MicRole::FrontIpsilateral => "front-ipsilateral",
            MicRole::FrontContralateral => "front-contralateral",
            MicRole::BackIpsilateral => "back-ipsilateral",
            MicRole::BackContralateral => "back-contralateral",
        }
    }
}

const BINAURAL_ORDER: [MicRole; 4] = [
    MicRole::FrontIpsilateral,
    MicRole::FrontContralateral,
    MicRole::BackIpsilateral,
    MicRole::BackContralateral,
];
const MONAURAL_ORDER: [MicRole; 2] = [MicRole::FrontIpsilateral, MicRole::BackIpsilateral];

/// Network hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GcfsConfig {
    pub variant: Variant,
    pub n_bins: usize,
    /// Latent size P.
    pub latent: usize,
    /// Number of groups G.
    pub groups: usize,
    /// Hidden size U.
    pub hidden: usize,
    /// Microphones combined by the filter-and-sum stage.
    pub filter_channels: usize,
}

impl GcfsConfig {
    pub fn new(variant: Variant) -> Self {
        Self { variant, n_bins: 65, latent: 128, groups: 8, hidden: 32, filter_channels: 2 }
    }

    pub fn monaural() -> Self {
        Self::new(Variant::Monaural)
    }

    pub fn binaural() -> Self {
        Self::new(Variant::Binaural)
    }

    pub fn channel_order(&self) -> &'static [MicRole] {
        match self.variant {
            Variant::Monaural => &MONAURAL_ORDER,
            Variant::Binaural => &BINAURAL_ORDER,
        }
    }

    pub fn feature_channels(&self) -> usize {
        self.channel_order().len()
    }

    /// Input feature size B: real and imaginary part of every bin per channel.
    pub fn input_size(&self) -> usize {
        self.feature_channels() * 2 * self.n_bins
    }

    /// P / G.
    pub fn group_size(&self) -> usize {
        self.latent / self.groups
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.groups == 0 || self.latent == 0 || self.hidden == 0 || self.n_bins < 2 {
            return bad("sizes must be nonzero");
        }
        if self.latent % self.groups != 0 {
            return bad("latent size must be divisible by the number of groups");
        }
        if self.filter_channels != 2 {
            return bad("only the two ipsilateral microphones can be filtered");
        }
        Ok(())
    }

    /// `key=value` lines, as stored in weight containers.
    pub fn to_kv(&self) -> String {
        let order: Vec<&str> = self.channel_order().iter().map(|r| r.as_str()).collect();
        format!(
            "variant={}\nn_bins={}\nlatent={}\ngroups={}\nhidden={}\nfilter_channels={}\nchannel_order={}\n",
            self.variant.as_str(),
            self.n_bins,
            self.latent,
            self.groups,
            self.hidden,
            self.filter_channels,
            order.join(","),
        )
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::binaural();
        let mut seen_variant = false;
        let mut order = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{line}`")))?;
            let num = || v.parse::<usize>().map_err(|_| Error::InvalidConfig(format!("bad value for {k}: `{v}`")));
            match k {
                "variant" => {
                    cfg.variant = Variant::parse(v).ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{v}`")))?;
                    seen_variant = true;
                }
                "n_bins" => cfg.n_bins = num()?,
                "latent" => cfg.latent = num()?,
                "groups" => cfg.groups = num()?,
                "hidden" => cfg.hidden = num()?,
                "filter_channels" => cfg.filter_channels = num()?,
                "channel_order" => order = Some(v.to_string()),
                _ => return Err(Error::InvalidConfig(format!("unknown config key `{k}`"))),
            }
        }
        if !seen_variant {
            return Err(Error::InvalidConfig("config has no variant".into()));
        }
        if let Some(order) = order {
            let want: Vec<&str> = cfg.channel_order().iter().map(|r| r.as_str()).collect();
            if order.split(',').ne(want.iter().copied()) {
                return Err(Error::InvalidConfig(format!("channel order `{order}` does not match variant")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Quantized to int8.
    Weight,
    /// Quantized to int16.
    Bias,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: ParamKind,
}

impl TensorSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Every quantized tensor of the network, in container order.
///
/// Dense weights are stored `[out, in]`; depthwise kernels `[channels, taps]`
/// with tap `j` applied to the input `j` frames back; GRU matrices stack
/// the update, reset and candidate gates along the first axis.
pub fn tensor_layout(cfg: &GcfsConfig) -> Vec<TensorSpec> {
    let (b, p, u, pg) = (cfg.input_size(), cfg.latent, cfg.hidden, cfg.group_size());
    let mut out = Vec::new();
    let mut push = |name: &str, shape: &[usize], kind| {
        out.push(TensorSpec { name: name.to_string(), shape: shape.to_vec(), kind });
    };
    use ParamKind::{Bias, Weight};
    push("input_fc.weight", &[p, b], Weight);
    push("input_fc.bias", &[p], Bias);
    push("conv.fc.weight", &[u, pg], Weight);
    push("conv.fc.bias", &[u], Bias);
    for (name, k) in [("conv.ds1", 5), ("conv.ds2", 3)] {
        push(&format!("{name}.depthwise"), &[u, k], Weight);
        push(&format!("{name}.pointwise"), &[u, u], Weight);
        push(&format!("{name}.bias"), &[u], Bias);
    }
    push("conv.skip.scale", &[u], Weight);
    let gc = |push: &mut dyn FnMut(&str, &[usize], ParamKind), pre: &str| {
        push(&format!("{pre}.down.weight"), &[pg, u], Weight);
        push(&format!("{pre}.down.bias"), &[pg], Bias);
        push(&format!("{pre}.mix.weight"), &[p, p], Weight);
        push(&format!("{pre}.mix.bias"), &[p], Bias);
        push(&format!("{pre}.up.weight"), &[u, pg], Weight);
        push(&format!("{pre}.up.bias"), &[u], Bias);
    };
    gc(&mut push, "gc1");
    for pre in ["gru1", "gru2"] {
        push(&format!("{pre}.w_ih"), &[3 * u, u], Weight);
        push(&format!("{pre}.w_hh"), &[3 * u, u], Weight);
        push(&format!("{pre}.bias"), &[3 * u], Bias);
    }
    push("gru.skip.scale", &[u], Weight);
    gc(&mut push, "gc2");
    push("out_fc.weight", &[pg, u], Weight);
    push("out_fc.bias", &[pg], Bias);
    let w_out = 2 * cfg.filter_channels * cfg.n_bins;
    push("head_w.weight", &[w_out, p], Weight);
    push("head_w.bias", &[w_out], Bias);
    push("head_c.weight", &[2 * cfg.n_bins, p], Weight);
    push("head_c.bias", &[2 * cfg.n_bins], Bias);
    out
}

/// Trainable scalars: every tensor entry plus the input scale and the
/// filter range `r`.
pub fn param_count(cfg: &GcfsConfig) -> usize {
    tensor_layout(cfg).iter().map(TensorSpec::numel).sum::<usize>() + 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(GcfsConfig::monaural().input_size(), 260);
        assert_eq!(GcfsConfig::binaural().input_size(), 520);
        assert_eq!(GcfsConfig::binaural().group_size(), 16);
    }

    #[test]
    fn channel_orders() {
        assert_eq!(GcfsConfig::binaural().channel_order(), &BINAURAL_ORDER);
        assert_eq!(
            GcfsConfig::monaural().channel_order(),
            &[MicRole::FrontIpsilateral, MicRole::BackIpsilateral]
        );
    }

    #[test]
    fn kv_round_trip() {
        for cfg in [GcfsConfig::monaural(), GcfsConfig::binaural()] {
            assert_eq!(GcfsConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
        }
        assert!(GcfsConfig::from_kv("variant=stereo\n").is_err());
        assert!(GcfsConfig::from_kv("latent=128\n").is_err());
        assert!(GcfsConfig::from_kv("variant=binaural\ngroups=7\n").is_err());
        assert!(GcfsConfig::from_kv("variant=monaural\nchannel_order=front-ipsilateral\n").is_err());
    }

    #[test]
    fn variant_difference_is_input_layer() {
        let d = param_count(&GcfsConfig::binaural()) - param_count(&GcfsConfig::monaural());
        assert_eq!(d, (520 - 260) * 128);
    }

    #[test]
    fn layout_names_unique() {
        let l = tensor_layout(&GcfsConfig::binaural());
        let mut names: Vec<_> = l.iter().map(|t| t.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), l.len());
    }
}
