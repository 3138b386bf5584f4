//! Fixed-point quantization and the `.gcfs` weight container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "GCFS"  u32 version  u32 crc32(payload)  u32 payload_len  payload
//! payload = u32 cfg_len, cfg (key=value lines, UTF-8)
//!           f32 input_scale, f32 r
//!           u32 n_tensors, then per tensor:
//!             u32 name_len, name, u8 dtype (1 = i8, 2 = i16), u8 rank,
//!             rank × u32 dims, numel × i8/i16 values
//! ```

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{FormatError, Result};
use crate::gcfsnet::{tensor_layout, GcfsConfig, ParamKind};

pub const MAGIC: [u8; 4] = *b"GCFS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantDtype {
    Int8,
    Int16,
}

impl QuantDtype {
    /// Weights are stored as int8, biases as int16.
    pub fn for_kind(kind: ParamKind) -> Self {
        match kind {
            ParamKind::Weight => QuantDtype::Int8,
            ParamKind::Bias => QuantDtype::Int16,
        }
    }

    /// Full-scale integer value, mapped to 1.0.
    pub fn scale(self) -> f64 {
        match self {
            QuantDtype::Int8 => 127.0,
            QuantDtype::Int16 => 32767.0,
        }
    }

    fn code(self) -> u8 {
        match self {
            QuantDtype::Int8 => 1,
            QuantDtype::Int16 => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(QuantDtype::Int8),
            2 => Some(QuantDtype::Int16),
            _ => None,
        }
    }

    fn bytes(self) -> usize {
        match self {
            QuantDtype::Int8 => 1,
            QuantDtype::Int16 => 2,
        }
    }
}

/// Symmetric quantization of values in `[-1, 1]`; out-of-range values
/// saturate. Returns the integers and how many values were clamped.
pub fn quantize(values: &[f64], dtype: QuantDtype) -> (Vec<i16>, usize) {
    let q = dtype.scale();
    let mut clamped = 0;
    let out = values
        .iter()
        .map(|&v| {
            let s = libm::round(v * q);
            if !(-q..=q).contains(&s) {
                clamped += 1;
            }
            // NaN maps to 0
            if s.is_nan() { 0 } else { s.clamp(-q, q) as i16 }
        })
        .collect();
    (out, clamped)
}

pub fn dequantize(data: &[i16], dtype: QuantDtype) -> Vec<f64> {
    let q = dtype.scale();
    data.iter().map(|&v| v as f64 / q).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: QuantDtype,
    /// Integer values; int8 tensors use only the i8 range.
    pub data: Vec<i16>,
}

impl QuantTensor {
    pub fn dequantize(&self) -> Vec<f64> {
        dequantize(&self.data, self.dtype)
    }
}

/// Decoded `.gcfs` file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightContainer {
    pub config: GcfsConfig,
    pub input_scale: f32,
    pub r: f32,
    pub tensors: Vec<QuantTensor>,
}

impl WeightContainer {
    /// Checks that the tensor set exactly matches the architecture.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let layout = tensor_layout(&self.config);
        if layout.len() != self.tensors.len() {
            return Err(FormatError::TensorMismatch(alloc::format!(
                "expected {} tensors, found {}",
                layout.len(),
                self.tensors.len()
            ))
            .into());
        }
        for (spec, t) in layout.iter().zip(&self.tensors) {
            if spec.name != t.name || spec.shape != t.shape {
                return Err(FormatError::TensorMismatch(alloc::format!(
                    "expected {} {:?}, found {} {:?}",
                    spec.name,
                    spec.shape,
                    t.name,
                    t.shape
                ))
                .into());
            }
            if QuantDtype::for_kind(spec.kind) != t.dtype {
                return Err(FormatError::TensorMismatch(alloc::format!("{} has the wrong dtype", t.name)).into());
            }
            if t.data.len() != spec.numel() {
                return Err(FormatError::TensorMismatch(alloc::format!("{} has the wrong length", t.name)).into());
            }
            if t.dtype == QuantDtype::Int8 && t.data.iter().any(|&v| !(-127..=127).contains(&v)) {
                return Err(FormatError::TensorMismatch(alloc::format!("{} exceeds the int8 range", t.name)).into());
            }
        }
        if !(self.r > 0.0 && self.r.is_finite() && self.input_scale.is_finite()) {
            return Err(FormatError::Malformed("invalid scalar parameters".into()).into());
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut p = Vec::new();
        let cfg = self.config.to_kv();
        put_u32(&mut p, cfg.len() as u32);
        p.extend_from_slice(cfg.as_bytes());
        p.extend_from_slice(&self.input_scale.to_le_bytes());
        p.extend_from_slice(&self.r.to_le_bytes());
        put_u32(&mut p, self.tensors.len() as u32);
        for t in &self.tensors {
            put_u32(&mut p, t.name.len() as u32);
            p.extend_from_slice(t.name.as_bytes());
            p.push(t.dtype.code());
            p.push(t.shape.len() as u8);
            for &d in &t.shape {
                put_u32(&mut p, d as u32);
            }
            for &v in &t.data {
                match t.dtype {
                    QuantDtype::Int8 => p.push(v as i8 as u8),
                    QuantDtype::Int16 => p.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
        let mut out = Vec::with_capacity(HEADER_LEN + p.len());
        out.extend_from_slice(&MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, crc32fast::hash(&p));
        put_u32(&mut out, p.len() as u32);
        out.extend_from_slice(&p);
        out
    }

    /// Parses and validates a container.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(FormatError::Truncated.into());
        }
        if bytes[..4] != MAGIC {
            return Err(FormatError::BadMagic.into());
        }
        let mut hdr = Reader { buf: &bytes[4..] };
        let version = hdr.u32()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let stored = hdr.u32()?;
        let len = hdr.u32()? as usize;
        let payload = hdr.take(len)?;
        if !hdr.buf.is_empty() {
            return Err(FormatError::Malformed("trailing bytes after payload".into()).into());
        }
        let computed = crc32fast::hash(payload);
        if computed != stored {
            return Err(FormatError::Checksum { stored, computed }.into());
        }

        let mut rd = Reader { buf: payload };
        let cfg_len = rd.u32()? as usize;
        let cfg_text = core::str::from_utf8(rd.take(cfg_len)?)
            .map_err(|_| FormatError::Malformed("config is not UTF-8".into()))?;
        let config = GcfsConfig::from_kv(cfg_text)?;
        let input_scale = rd.f32()?;
        let r = rd.f32()?;
        let n = rd.u32()? as usize;
        let mut tensors = Vec::new();
        for _ in 0..n {
            let name_len = rd.u32()? as usize;
            let name = core::str::from_utf8(rd.take(name_len)?)
                .map_err(|_| FormatError::Malformed("tensor name is not UTF-8".into()))?
                .into();
            let dtype = QuantDtype::from_code(rd.u8()?)
                .ok_or_else(|| FormatError::Malformed("unknown tensor dtype".into()))?;
            let rank = rd.u8()? as usize;
            let shape = (0..rank).map(|_| rd.u32().map(|d| d as usize)).collect::<core::result::Result<Vec<_>, FormatError>>()?;
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| FormatError::Malformed("tensor too large".into()))?;
            let raw = rd.take(numel.checked_mul(dtype.bytes()).ok_or(FormatError::Truncated)?)?;
            let data = match dtype {
                QuantDtype::Int8 => raw.iter().map(|&b| b as i8 as i16).collect(),
                QuantDtype::Int16 => raw.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect(),
            };
            tensors.push(QuantTensor { name, shape, dtype, data });
        }
        if !rd.buf.is_empty() {
            return Err(FormatError::Malformed("trailing bytes inside payload".into()).into());
        }
        let wc = Self { config, input_scale, r, tensors };
        wc.validate()?;
        Ok(wc)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> core::result::Result<&'a [u8], FormatError> {
        if self.buf.len() < n {
            return Err(FormatError::Truncated);
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u8(&mut self) -> core::result::Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> core::result::Result<u32, FormatError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self) -> core::result::Result<f32, FormatError> {
        Ok(f32::from_bits(self.u32()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::gcfsnet::{GcfsModel, Variant};

    #[test]
    fn quantize_examples() {
        let (q, n) = quantize(&[0.0, 1.0, -1.0, 0.5, 1.5, -3.0, 0.0039], QuantDtype::Int8);
        assert_eq!(q, [0, 127, -127, 64, 127, -127, 0]);
        assert_eq!(n, 2);
        let (q, n) = quantize(&[0.5, -0.25, 1.0], QuantDtype::Int16);
        assert_eq!(q, [16384, -8192, 32767]);
        assert_eq!(n, 0);
    }

    #[test]
    fn round_trip_is_exact_on_grid() {
        let ints: Vec<i16> = (-127..=127).collect();
        let back = quantize(&dequantize(&ints, QuantDtype::Int8), QuantDtype::Int8).0;
        assert_eq!(ints, back);
    }

    fn container() -> WeightContainer {
        GcfsModel::random(GcfsConfig::monaural(), 1).unwrap().to_container().0
    }

    #[test]
    fn encode_decode_identity() {
        let wc = container();
        let bytes = wc.encode();
        assert_eq!(&bytes[..4], b"GCFS");
        assert_eq!(WeightContainer::decode(&bytes).unwrap(), wc);
        let bin = GcfsModel::random(GcfsConfig::binaural(), 2).unwrap().to_container().0;
        let back = WeightContainer::decode(&bin.encode()).unwrap();
        assert_eq!(back.config.variant, Variant::Binaural);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = container().encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(WeightContainer::decode(&bad), Err(Error::Format(FormatError::BadMagic))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(WeightContainer::decode(&bad), Err(Error::Format(FormatError::UnsupportedVersion(9)))));
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x55;
        assert!(matches!(WeightContainer::decode(&bad), Err(Error::Format(FormatError::Checksum { .. }))));
        for cut in [3, 10, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(WeightContainer::decode(&bytes[..cut]), Err(Error::Format(FormatError::Truncated))));
        }
    }

    #[test]
    fn tensor_set_must_match() {
        let mut wc = container();
        wc.tensors.pop();
        assert!(matches!(wc.validate(), Err(Error::Format(FormatError::TensorMismatch(_)))));
        // a binaural config with monaural tensors
        let mut wc = container();
        wc.config = GcfsConfig::binaural();
        assert!(WeightContainer::decode(&wc.encode()).is_err());
        let mut wc = container();
        wc.tensors[0].name = "other".into();
        assert!(wc.validate().is_err());
    }
}
