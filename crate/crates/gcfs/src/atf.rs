//! Per-bin target transfer functions for the MVDR, as CSV.
//!
//! One row per STFT bin: `bin,re_fl,im_fl,re_fr,im_fr,re_bl,im_bl,re_br,im_br`.
//! A header line and `#` comments are skipped.

use std::path::Path;

use gcfs_core::mvdr::SteeringVector;
use gcfs_core::Complex64;

use crate::error::{AppError, AppResult};

pub fn parse_atf(text: &str, n_bins: usize) -> AppResult<Vec<SteeringVector>> {
    let mut rows = vec![None; n_bins];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("bin") {
            continue;
        }
        let bad = |what: &str| AppError::Config(format!("ATF line {}: {what}", ln + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(bad("expected 9 comma-separated fields"));
        }
        let k: usize = fields[0].parse().map_err(|_| bad("bad bin index"))?;
        if k >= n_bins {
            return Err(bad("bin index out of range"));
        }
        let v: Vec<f64> = fields[1..].iter().map(|f| f.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("bad number"))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad("non-finite value"));
        }
        rows[k] = Some(std::array::from_fn(|m| Complex64::new(v[2 * m], v[2 * m + 1])));
    }
    rows.into_iter()
        .enumerate()
        .map(|(k, r)| r.ok_or_else(|| AppError::Config(format!("ATF is missing bin {k}"))))
        .collect()
}

pub fn read_atf(path: &Path, n_bins: usize) -> AppResult<Vec<SteeringVector>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_atf(&text, n_bins)
}

pub fn format_atf(atf: &[SteeringVector]) -> String {
    let mut s = String::from("bin,re_fl,im_fl,re_fr,im_fr,re_bl,im_bl,re_br,im_br\n");
    for (k, h) in atf.iter().enumerate() {
        s += &k.to_string();
        for z in h {
            s += &format!(",{:e},{:e}", z.re, z.im);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use gcfs_core::dsp::StftConfig;
    use gcfs_core::geometry::ArrayGeometry;
    use gcfs_core::mvdr::steering_vector;

    #[test]
    fn format_parse_round_trip() {
        let cfg = StftConfig::hearing_aid();
        let g = ArrayGeometry::default();
        let atf: Vec<_> = (0..cfg.n_bins).map(|k| steering_vector(&g, 30.0, cfg.bin_freq(k), 0)).collect();
        assert_eq!(parse_atf(&format_atf(&atf), cfg.n_bins).unwrap(), atf);
    }

    #[test]
    fn malformed_input() {
        assert!(parse_atf("0,1,0,1,0,1,0,1,0\n", 2).is_err());
        assert!(parse_atf("0,1,0,1,0,1,0,1\n", 1).is_err());
        assert!(parse_atf("0,1,0,1,0,1,0,1,x\n", 1).is_err());
        assert!(parse_atf("5,1,0,1,0,1,0,1,0\n", 1).is_err());
        assert!(parse_atf("# c\n0,1,0,1,0,1,0,1,0\n", 1).is_ok());
    }
}
