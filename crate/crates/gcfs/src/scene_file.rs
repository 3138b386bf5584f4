//! Plain-text scene specs.
//!
//! ```text
//! # comments start with '#'
//! better_ear_snr = 0
//! seed = 7
//! duration = 3          # seconds, for generated signals
//! distance = 1.56
//! target = 0 probe      # azimuth, source
//! interferer = 60 probe 0   # azimuth, source, snr_offset
//! interferer = -60 babble.wav 0
//! diffuse = white -6 36     # source, level dB, n_virtual
//! reverb = 0.5 6            # t60 s, DRR dB
//! ```
//!
//! A source is `probe` (speech-shaped noise), `white`, or a mono 16 kHz
//! WAV path relative to the spec file.

use std::path::Path;

use gcfs_core::scene::{self, DiffuseNoise, Interferer, Reverb, SceneSpec, Source};
use gcfs_core::SAMPLE_RATE;

use crate::error::{AppError, AppResult};
use crate::wav::read_wav;

#[derive(Debug, Clone, PartialEq)]
enum SignalSource {
    Probe,
    White,
    File(String),
}

fn load_signal(src: &SignalSource, base: &Path, len: usize, seed: u64) -> AppResult<Vec<f64>> {
    Ok(match src {
        SignalSource::Probe => scene::probe_signal(len, seed),
        SignalSource::White => scene::white_noise(len, seed).into_iter().map(|v| v * scene::PROBE_RMS).collect(),
        SignalSource::File(p) => {
            let path = base.join(p);
            let a = read_wav(&path)?;
            if a.n_channels() != 1 {
                return Err(AppError::Config(format!("{}: scene sources must be mono", path.display())));
            }
            a.into_channels().remove(0)
        }
    })
}

/// Parses a spec; `base` resolves relative WAV paths.
pub fn parse_scene(text: &str, base: &Path, seed_override: Option<u64>) -> AppResult<SceneSpec> {
    let mut snr = None;
    let mut seed = 0u64;
    let mut duration = 3.0;
    let mut distance = scene::DEFAULT_DISTANCE;
    let mut target = None;
    let mut interferers = Vec::new();
    let mut diffuse = None;
    let mut reverb = None;

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: String| AppError::Config(format!("scene line {}: {what}", ln + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let parts: Vec<&str> = value.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")));
        let source = |s: &str| match s {
            "probe" => SignalSource::Probe,
            "white" => SignalSource::White,
            p => SignalSource::File(p.to_string()),
        };
        let arity = |n: usize| if parts.len() == n { Ok(()) } else { Err(bad(format!("{key} takes {n} values"))) };
        match key {
            "better_ear_snr" => {
                arity(1)?;
                snr = Some(num(parts[0])?);
            }
            "seed" => {
                arity(1)?;
                seed = parts[0].parse().map_err(|_| bad("seed must be an unsigned integer".into()))?;
            }
            "duration" => {
                arity(1)?;
                duration = num(parts[0])?;
            }
            "distance" => {
                arity(1)?;
                distance = num(parts[0])?;
            }
            "target" => {
                arity(2)?;
                target = Some((num(parts[0])?, source(parts[1])));
            }
            "interferer" => {
                arity(3)?;
                interferers.push((num(parts[0])?, source(parts[1]), num(parts[2])?));
            }
            "diffuse" => {
                arity(3)?;
                let n: usize = parts[2].parse().map_err(|_| bad("n_virtual must be an integer".into()))?;
                diffuse = Some((source(parts[0]), num(parts[1])?, n));
            }
            "reverb" => {
                arity(2)?;
                reverb = Some(Reverb { t60: num(parts[0])?, drr_db: num(parts[1])? });
            }
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }

    let seed = seed_override.unwrap_or(seed);
    let (t_az, t_src) = target.ok_or_else(|| AppError::Config("scene has no target".into()))?;
    let snr = snr.ok_or_else(|| AppError::Config("scene needs better_ear_snr".into()))?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(AppError::Config("duration must be positive".into()));
    }
    let len = (duration * SAMPLE_RATE as f64) as usize;
    // every generated signal gets its own seed stream
    let sub = |i: u64| seed.wrapping_mul(0x9E37_79B9).wrapping_add(i);
    let mut spec = SceneSpec::new(Source { azimuth: t_az, signal: load_signal(&t_src, base, len, sub(0))? }, snr, seed);
    spec.distance = distance;
    spec.reverb = reverb;
    for (i, (az, src, off)) in interferers.into_iter().enumerate() {
        spec.interferers.push(Interferer { azimuth: az, signal: load_signal(&src, base, len, sub(1 + i as u64))?, snr_offset: off });
    }
    if let Some((src, level, n_virtual)) = diffuse {
        spec.diffuse = Some(DiffuseNoise { signal: load_signal(&src, base, len, sub(1000))?, level, n_virtual });
    }
    spec.validate()?;
    Ok(spec)
}

pub fn read_scene(path: &Path, seed_override: Option<u64>) -> AppResult<SceneSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_scene(&text, path.parent().unwrap_or(Path::new(".")), seed_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S0N60: &str = "better_ear_snr = 2\nseed = 4\nduration = 0.5\ntarget = 0 probe\ninterferer = 60 probe 0\ninterferer = -60 white 3 # quieter\n";

    #[test]
    fn parses_s0n60() {
        let s = parse_scene(S0N60, Path::new("."), None).unwrap();
        assert_eq!(s.better_ear_snr, 2.0);
        assert_eq!(s.seed, 4);
        assert_eq!(s.target.signal.len(), 8000);
        assert_eq!(s.interferers.len(), 2);
        assert_eq!(s.interferers[1].snr_offset, 3.0);
        assert_eq!(s, parse_scene(S0N60, Path::new("."), None).unwrap());
        assert_ne!(s, parse_scene(S0N60, Path::new("."), Some(5)).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "target = 0 probe\n",
            "better_ear_snr = 0\n",
            "better_ear_snr = x\ntarget = 0 probe\n",
            "better_ear_snr = 0\ntarget = 0\n",
            "better_ear_snr = 0\ntarget = 0 probe\ncolour = red\n",
            "better_ear_snr = 0\ntarget = 200 probe\n",
        ] {
            assert_eq!(parse_scene(text, Path::new("."), None).unwrap_err().exit_code(), 3, "{text}");
        }
        let err = parse_scene("better_ear_snr = 0\ntarget = 0 nothere.wav\n", Path::new("/nonexistent"), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
