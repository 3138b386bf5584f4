//! Objective metrics, the beam-pattern harness and the SNR sweep.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::audio::MultichannelAudio;
use crate::engine::{process_stream, FrameProcessor};
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::scene::{self, Interferer, SceneSpec, Source};
use crate::{mic, SAMPLE_RATE};

/// Lower bound reported by [`attenuation_db`].
pub const ATTENUATION_FLOOR_DB: f64 = -80.0;
/// Magnitude cap of [`si_sdr`].
pub const SI_SDR_CAP_DB: f64 = 100.0;

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Mean energy per sample; zero for an empty slice.
pub fn power(x: &[f64]) -> f64 {
    if x.is_empty() { 0.0 } else { energy(x) / x.len() as f64 }
}

/// `10·log10(E_processed / E_bypass)`, floored at -80 dB.
pub fn attenuation_db(processed: &[f64], bypass: &[f64]) -> Result<f64> {
    if processed.len() != bypass.len() {
        return Err(Error::LengthMismatch { expected: bypass.len(), found: processed.len() });
    }
    let eb = energy(bypass);
    if eb <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let ep = energy(processed);
    if ep <= 0.0 {
        return Ok(ATTENUATION_FLOOR_DB);
    }
    Ok((10.0 * libm::log10(ep / eb)).max(ATTENUATION_FLOOR_DB))
}

/// Scale-invariant SDR in dB, capped at ±100 dB.
pub fn si_sdr(est: &[f64], reference: &[f64]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch { expected: reference.len(), found: est.len() });
    }
    let rr = energy(reference);
    if rr <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let alpha = est.iter().zip(reference).map(|(e, r)| e * r).sum::<f64>() / rr;
    let (mut st, mut ee) = (0.0, 0.0);
    for (e, r) in est.iter().zip(reference) {
        let s = alpha * r;
        st += s * s;
        ee += (e - s) * (e - s);
    }
    let v = if ee <= 0.0 {
        SI_SDR_CAP_DB
    } else if st <= 0.0 {
        -SI_SDR_CAP_DB
    } else {
        10.0 * libm::log10(st / ee)
    };
    Ok(v.clamp(-SI_SDR_CAP_DB, SI_SDR_CAP_DB))
}

/// Runs `proc` from a reset state and returns its output with the
/// processor latency removed, same length as `input`.
pub fn process_aligned<P: FrameProcessor + ?Sized>(proc: &mut P, input: &MultichannelAudio) -> Result<MultichannelAudio> {
    proc.reset();
    let lat = proc.latency();
    let padded = input.slice(0, input.len() + lat);
    let out = process_stream(proc, &padded)?.audio;
    Ok(out.slice(lat, input.len()))
}

/// Incidence angles of the beam pattern: -180…180 in 5° steps.
pub fn beam_angles() -> Vec<f64> {
    (0..73).map(|i| -180.0 + 5.0 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub angles: Vec<f64>,
    pub attenuation_left: Vec<f64>,
    pub attenuation_right: Vec<f64>,
}

impl BeamPattern {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("angle_deg,att_left_db,att_right_db\n");
        for i in 0..self.angles.len() {
            s += &format!("{},{:.4},{:.4}\n", self.angles[i], self.attenuation_left[i], self.attenuation_right[i]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPatternOptions {
    /// Adaptation time discarded before measuring, in seconds.
    pub warmup_secs: f64,
    /// Source distance in metres.
    pub distance: f64,
    /// Number of probe segments the attenuation is averaged over.
    pub n_utterances: usize,
    pub angles: Vec<f64>,
}

impl Default for BeamPatternOptions {
    fn default() -> Self {
        Self { warmup_secs: 0.0, distance: scene::DEFAULT_DISTANCE, n_utterances: 1, angles: beam_angles() }
    }
}

/// Attenuation over incidence angle relative to the unprocessed front
/// microphones.
///
/// For every angle the probe (preceded by `warmup_secs` of the probe's
/// own continuation) is rendered, the processor is reset and run, and the
/// per-ear energy ratio against the ipsilateral front microphone is
/// computed on each of `n_utterances` segments. The segment values in dB
/// are averaged.
pub fn beam_pattern<P: FrameProcessor + ?Sized>(
    proc: &mut P,
    geom: &ArrayGeometry,
    probe: &[f64],
    opts: &BeamPatternOptions,
) -> Result<BeamPattern> {
    if opts.n_utterances == 0 || probe.len() < opts.n_utterances * crate::engine::HOP {
        return Err(Error::InvalidConfig("probe too short for the requested segments".into()));
    }
    let warm = (opts.warmup_secs * SAMPLE_RATE as f64) as usize;
    // warm-up material cycles through the probe so adaptive processors see stationary input
    let sig: Vec<f64> = (0..warm + probe.len()).map(|i| probe[(i + probe.len() - warm % probe.len()) % probe.len()]).collect();
    let seg = probe.len() / opts.n_utterances;
    let mut left = Vec::with_capacity(opts.angles.len());
    let mut right = Vec::with_capacity(opts.angles.len());
    for &az in &opts.angles {
        let rendered = scene::render_point_source(geom, normalize_azimuth(az), opts.distance, &sig)?;
        let out = process_aligned(proc, &rendered)?;
        let mut acc = [0.0; 2];
        for u in 0..opts.n_utterances {
            let start = warm + u * seg;
            for (e, front) in [(0, mic::FRONT_LEFT), (1, mic::FRONT_RIGHT)] {
                acc[e] += attenuation_db(&out.channel(e)[start..start + seg], &rendered.channel(front)[start..start + seg])?;
            }
        }
        left.push(acc[0] / opts.n_utterances as f64);
        right.push(acc[1] / opts.n_utterances as f64);
    }
    Ok(BeamPattern { angles: opts.angles.clone(), attenuation_left: left, attenuation_right: right })
}

/// Maps any angle to [-180, 180).
pub fn normalize_azimuth(az: f64) -> f64 {
    num_traits::Euclid::rem_euclid(&(az + 180.0), &360.0) - 180.0
}

/// Scene layout for the sweep; signals are generated per sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTemplate {
    pub target_azimuth: f64,
    /// `(azimuth, snr_offset)` per interferer.
    pub interferers: Vec<(f64, f64)>,
    /// `(level, n_virtual)` of an optional diffuse component.
    pub diffuse: Option<(f64, usize)>,
    pub sentence_secs: f64,
    pub distance: f64,
    pub seed: u64,
}

impl SweepTemplate {
    /// Target at 0° with interferers at ±60°.
    pub fn s0_n60() -> Self {
        Self {
            target_azimuth: 0.0,
            interferers: vec![(60.0, 0.0), (-60.0, 0.0)],
            diffuse: None,
            sentence_secs: 1.5,
            distance: scene::DEFAULT_DISTANCE,
            seed: 1,
        }
    }

    /// Scene spec of sentence `i` at `snr`.
    pub fn scene(&self, i: usize, snr: f64) -> SceneSpec {
        let n = (self.sentence_secs * SAMPLE_RATE as f64) as usize;
        let base = self.seed.wrapping_mul(1_000_003).wrapping_add(i as u64 * 101);
        let mut s = SceneSpec::new(Source { azimuth: self.target_azimuth, signal: scene::probe_signal(n, base) }, snr, base);
        s.distance = self.distance;
        s.interferers = self
            .interferers
            .iter()
            .enumerate()
            .map(|(k, &(azimuth, snr_offset))| Interferer {
                azimuth,
                signal: scene::probe_signal(n, base + 1 + k as u64),
                snr_offset,
            })
            .collect();
        s.diffuse = self.diffuse.map(|(level, n_virtual)| scene::DiffuseNoise {
            signal: scene::white_noise(n, base + 50),
            level,
            n_virtual,
        });
        s
    }
}

/// Sweep grid used by the objective evaluation: -5…10 dB in 1 dB steps.
pub fn sweep_snrs() -> Vec<f64> {
    (-5..=10).map(|v| v as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub algorithm: String,
    pub si_sdr_left: f64,
    pub si_sdr_right: f64,
    pub si_sdr_better_ear: f64,
    pub noise_att_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub snrs: Vec<f64>,
    pub algorithms: Vec<String>,
    /// One row per SNR and algorithm, each averaged over sentences.
    pub rows: Vec<SweepRow>,
}

/// Name of the implicit row computed on the unprocessed front mics.
pub const UNPROCESSED: &str = "unprocessed";

impl SweepReport {
    pub fn rows_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    /// Arithmetic mean over the SNR grid.
    pub fn mean(&self, algorithm: &str) -> Option<SweepRow> {
        let rows: Vec<_> = self.rows_for(algorithm).collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let avg = |f: fn(&SweepRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        Some(SweepRow {
            snr_db: f64::NAN,
            algorithm: algorithm.to_string(),
            si_sdr_left: avg(|r| r.si_sdr_left),
            si_sdr_right: avg(|r| r.si_sdr_right),
            si_sdr_better_ear: avg(|r| r.si_sdr_better_ear),
            noise_att_db: avg(|r| r.noise_att_db),
        })
    }

    /// CSV with one row per grid point followed by one `mean` row per
    /// algorithm.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,algorithm,si_sdr_left,si_sdr_right,si_sdr_better_ear,noise_att_db\n");
        let line = |snr: String, r: &SweepRow| {
            format!(
                "{snr},{},{:.4},{:.4},{:.4},{:.4}\n",
                r.algorithm, r.si_sdr_left, r.si_sdr_right, r.si_sdr_better_ear, r.noise_att_db
            )
        };
        for r in &self.rows {
            s += &line(format!("{}", r.snr_db), r);
        }
        for a in &self.algorithms {
            if let Some(m) = self.mean(a) {
                s += &line("mean".into(), &m);
            }
        }
        s
    }
}

/// Runs every processor on `n_sentences` scenes per SNR.
///
/// SI-SDR is measured per ear against the clean front-mic target; the
/// better-ear value is the larger of the two. Noise attenuation runs the
/// processor on the noise alone and compares with the front mics,
/// averaged over both ears. An extra `unprocessed` algorithm scores the
/// front mics of the mixture directly.
pub fn snr_sweep(
    procs: &mut [&mut dyn FrameProcessor],
    geom: &ArrayGeometry,
    template: &SweepTemplate,
    snrs: &[f64],
    n_sentences: usize,
) -> Result<SweepReport> {
    if n_sentences == 0 || snrs.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one SNR and one sentence".into()));
    }
    let mut algorithms = vec![String::from(UNPROCESSED)];
    algorithms.extend(procs.iter().map(|p| p.name().to_string()));
    let n_alg = algorithms.len();
    // sums[snr][alg] = [left, right, better, noise_att]
    let mut sums = vec![vec![[0.0f64; 4]; n_alg]; snrs.len()];

    for i in 0..n_sentences {
        // Rendering is linear, so one render at 0 dB is rescaled for every SNR.
        let base = scene::mix_scene(&template.scene(i, 0.0), geom)?;
        let front = [mic::FRONT_LEFT, mic::FRONT_RIGHT];
        let noise_front = base.noise_ref.select(&front);
        let mut noise_att = vec![0.0; n_alg];
        for (a, p) in procs.iter_mut().enumerate() {
            let out = process_aligned(&mut **p, &base.noise_ref)?;
            let l = attenuation_db(out.channel(0), noise_front.channel(0))?;
            let r = attenuation_db(out.channel(1), noise_front.channel(1))?;
            noise_att[a + 1] = 0.5 * (l + r);
        }
        for (si, &snr) in snrs.iter().enumerate() {
            let g = libm::pow(10.0, snr / 20.0);
            let target = base.target_image.scaled(g);
            let mixture = target.add(&base.noise_ref)?;
            let refs = base.target_ref.scaled(g);
            let score = |out: &MultichannelAudio| -> Result<[f64; 3]> {
                let l = si_sdr(out.channel(0), refs.channel(0))?;
                let r = si_sdr(out.channel(1), refs.channel(1))?;
                Ok([l, r, l.max(r)])
            };
            let mut record = |a: usize, m: [f64; 3]| {
                let s = &mut sums[si][a];
                s[0] += m[0];
                s[1] += m[1];
                s[2] += m[2];
                s[3] += noise_att[a];
            };
            record(0, score(&mixture.select(&front))?);
            for (a, p) in procs.iter_mut().enumerate() {
                let out = process_aligned(&mut **p, &mixture)?;
                record(a + 1, score(&out)?);
            }
        }
    }

    let n = n_sentences as f64;
    let mut rows = Vec::new();
    for (si, &snr) in snrs.iter().enumerate() {
        for (a, name) in algorithms.iter().enumerate() {
            let s = sums[si][a];
            rows.push(SweepRow {
                snr_db: snr,
                algorithm: name.clone(),
                si_sdr_left: s[0] / n,
                si_sdr_right: s[1] / n,
                si_sdr_better_ear: s[2] / n,
                noise_att_db: s[3] / n,
            });
        }
    }
    Ok(SweepReport { snrs: snrs.to_vec(), algorithms, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Bypass, GainProcessor};
    use crate::scene::white_noise;

    #[test]
    fn attenuation_examples() {
        let x = white_noise(1000, 1);
        assert_eq!(attenuation_db(&x, &x).unwrap(), 0.0);
        let half: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        assert!((attenuation_db(&half, &x).unwrap() + 6.020_599_913).abs() < 1e-6);
        assert_eq!(attenuation_db(&[0.0; 1000], &x).unwrap(), -80.0);
        assert!(matches!(attenuation_db(&x, &[0.0; 1000]), Err(Error::ZeroEnergy)));
        assert!(attenuation_db(&x[..10], &x).is_err());
    }

    #[test]
    fn si_sdr_examples() {
        let r = white_noise(4000, 2);
        assert_eq!(si_sdr(&r, &r).unwrap(), 100.0);
        let r3: Vec<f64> = r.iter().map(|v| 3.0 * v).collect();
        assert_eq!(si_sdr(&r3, &r).unwrap(), 100.0);
        // orthogonal noise of equal norm
        let mut n = white_noise(4000, 3);
        let p = n.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / energy(&r);
        n.iter_mut().zip(&r).for_each(|(a, b)| *a -= p * b);
        let g = (energy(&r) / energy(&n)).sqrt();
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + g * b).collect();
        assert!(si_sdr(&est, &r).unwrap().abs() < 1e-9);
        assert!(matches!(si_sdr(&r, &[0.0; 4000]), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn bypass_beam_pattern_is_flat() {
        let probe = scene::probe_signal(4000, 1);
        let opts = BeamPatternOptions { angles: vec![-180.0, -45.0, 0.0, 90.0, 175.0], ..Default::default() };
        let bp = beam_pattern(&mut Bypass::new(), &ArrayGeometry::default(), &probe, &opts).unwrap();
        for v in bp.attenuation_left.iter().chain(&bp.attenuation_right) {
            assert!(v.abs() < 1e-12);
        }
        let csv = bp.to_csv();
        assert!(csv.starts_with("angle_deg,att_left_db,att_right_db\n-180,"));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn aligned_output_removes_latency() {
        let x = MultichannelAudio::new(16000, (0..4).map(|m| white_noise(500, m)).collect()).unwrap();
        let out = process_aligned(&mut Bypass::delayed(64), &x).unwrap();
        assert_eq!(out.channel(0), x.channel(0));
        assert_eq!(out.channel(1), x.channel(1));
    }

    #[test]
    fn small_sweep_shapes_and_invariants() {
        let mut t = SweepTemplate::s0_n60();
        t.sentence_secs = 0.5;
        let mut bypass = Bypass::new();
        let mut gain = GainProcessor::new(-9.0).unwrap();
        let mut procs: [&mut dyn FrameProcessor; 2] = [&mut bypass, &mut gain];
        let snrs = [-5.0, 0.0, 5.0];
        let rep = snr_sweep(&mut procs, &ArrayGeometry::default(), &t, &snrs, 2).unwrap();
        assert_eq!(rep.rows.len(), 9);
        let un: Vec<_> = rep.rows_for(UNPROCESSED).cloned().collect();
        let g: Vec<_> = rep.rows_for("gain").cloned().collect();
        for (a, b) in un.iter().zip(&g) {
            assert!((a.si_sdr_left - b.si_sdr_left).abs() < 1e-9);
            assert!((b.noise_att_db + 9.0).abs() < 1e-9);
        }
        assert!(un.windows(2).all(|w| w[1].si_sdr_better_ear > w[0].si_sdr_better_ear));
        let csv = rep.to_csv();
        assert!(csv.starts_with("snr_db,algorithm,si_sdr_left,si_sdr_right,si_sdr_better_ear,noise_att_db\n"));
        assert_eq!(csv.lines().filter(|l| l.starts_with("mean,")).count(), 3);
        let m = rep.mean("bypass").unwrap();
        let avg = rep.rows_for("bypass").map(|r| r.si_sdr_left).sum::<f64>() / 3.0;
        assert!((m.si_sdr_left - avg).abs() < 1e-12);
    }
}
