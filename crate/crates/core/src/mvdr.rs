//! Fixed binaural MVDR beamformer steered to the front under an isotropic
//! diffuse noise model.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dsp::{StftAnalyzer, StftConfig, StftSynthesizer};
use crate::engine::{FrameProcessor, HOP};
use crate::error::{Error, Result};
use crate::geometry::{direction, dot, ArrayGeometry};
use crate::{mic, Ear};

pub type SteeringVector = [Complex64; 4];
pub type Covariance = [[Complex64; 4]; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct MvdrConfig {
    pub steer_azimuth: f64,
    pub diagonal_loading: f64,
    /// Reference microphone of the (left, right) ear.
    pub reference_mics: (usize, usize),
}

impl Default for MvdrConfig {
    fn default() -> Self {
        Self {
            steer_azimuth: 0.0,
            diagonal_loading: 0.15,
            reference_mics: (mic::FRONT_LEFT, mic::FRONT_RIGHT),
        }
    }
}

/// Relative propagation delays of a plane wave, in seconds, per microphone.
pub fn plane_wave_delays(geom: &ArrayGeometry, azimuth_deg: f64) -> [f64; 4] {
    let u = direction(azimuth_deg);
    let mut tau = [0.0; 4];
    for (t, p) in tau.iter_mut().zip(&geom.mic_positions) {
        *t = -dot(u, *p) / geom.speed_of_sound;
    }
    tau
}

/// Far-field steering vector normalized to the `reference` microphone.
pub fn steering_vector(geom: &ArrayGeometry, azimuth_deg: f64, freq: f64, reference: usize) -> SteeringVector {
    let tau = plane_wave_delays(geom, azimuth_deg);
    let mut d = [Complex64::new(0.0, 0.0); 4];
    for (dm, t) in d.iter_mut().zip(tau) {
        *dm = Complex64::from_polar(1.0, -2.0 * PI * freq * (t - tau[reference]));
    }
    d
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Spherically isotropic noise coherence, `Γ_ij = sin(kd_ij) / (kd_ij)`.
pub fn diffuse_covariance(geom: &ArrayGeometry, freq: f64) -> Covariance {
    let mut g = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let x = 2.0 * PI * freq * geom.distance(i, j) / geom.speed_of_sound;
            *v = Complex64::new(sinc(x), 0.0);
        }
    }
    g
}

/// Gaussian elimination with partial pivoting.
fn solve<const N: usize>(mut a: [[Complex64; N]; N], mut b: [Complex64; N]) -> Option<[Complex64; N]> {
    let scale = a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                let sub = f * a[col][k];
                a[row][k] -= sub;
            }
            let sub = f * b[col];
            b[row] -= sub;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for k in row + 1..N {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// `w = (Γ + δI)⁻¹ d / (dᴴ (Γ + δI)⁻¹ d)`, so that `wᴴ d = 1`.
pub fn mvdr_weights(d: &SteeringVector, gamma: &Covariance, loading: f64) -> Result<SteeringVector> {
    if !(loading > 0.0) {
        return Err(Error::InvalidConfig("diagonal loading must be positive".into()));
    }
    let mut a = *gamma;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += loading;
    }
    let x = solve(a, *d).ok_or(Error::Singular)?;
    let denom: Complex64 = d.iter().zip(&x).map(|(di, xi)| di.conj() * xi).sum();
    if !(denom.norm() > 1e-300) || !denom.is_finite() {
        return Err(Error::Singular);
    }
    let mut w = x;
    w.iter_mut().for_each(|v| *v /= denom);
    Ok(w)
}

/// `wᴴ d`.
pub fn response(w: &SteeringVector, d: &SteeringVector) -> Complex64 {
    w.iter().zip(d).map(|(wi, di)| wi.conj() * di).sum()
}

/// `wᴴ R w` (real for Hermitian `R`).
pub fn quadratic_form(w: &SteeringVector, r: &Covariance) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += w[i].conj() * r[i][j] * w[j];
        }
    }
    acc.re
}

/// Time-invariant binaural MVDR: one weight set per ear and bin.
#[derive(Debug, Clone)]
pub struct MvdrProcessor {
    weights: [Vec<SteeringVector>; 2],
    analyzer: StftAnalyzer,
    synth: [StftSynthesizer; 2],
    out: [Vec<Complex64>; 2],
}

impl MvdrProcessor {
    pub fn new(geom: &ArrayGeometry, cfg: &MvdrConfig) -> Result<Self> {
        let stft = StftConfig::hearing_aid();
        let steering: Vec<SteeringVector> = (0..stft.n_bins)
            .map(|k| steering_vector(geom, cfg.steer_azimuth, stft.bin_freq(k), mic::FRONT_LEFT))
            .collect();
        Self::with_steering(geom, cfg, &steering)
    }

    /// Uses per-bin acoustic transfer functions of the target direction
    /// (e.g. measured) instead of the plane-wave model. Each ear normalizes
    /// them to its own reference microphone.
    pub fn with_steering(geom: &ArrayGeometry, cfg: &MvdrConfig, atf: &[SteeringVector]) -> Result<Self> {
        let stft = StftConfig::hearing_aid();
        if atf.len() != stft.n_bins {
            return Err(Error::LengthMismatch { expected: stft.n_bins, found: atf.len() });
        }
        let mut weights = [Vec::with_capacity(stft.n_bins), Vec::with_capacity(stft.n_bins)];
        for (k, h) in atf.iter().enumerate() {
            let gamma = diffuse_covariance(geom, stft.bin_freq(k));
            for (ear, refm) in [cfg.reference_mics.0, cfg.reference_mics.1].into_iter().enumerate() {
                if h[refm].norm() == 0.0 {
                    return Err(Error::InvalidConfig("reference transfer function is zero".into()));
                }
                let mut d = *h;
                let r = h[refm];
                d.iter_mut().for_each(|v| *v /= r);
                weights[ear].push(mvdr_weights(&d, &gamma, cfg.diagonal_loading)?);
            }
        }
        Ok(Self {
            weights,
            analyzer: StftAnalyzer::new(stft, mic::COUNT)?,
            synth: [StftSynthesizer::new(stft)?, StftSynthesizer::new(stft)?],
            out: [vec![Complex64::new(0.0, 0.0); stft.n_bins], vec![Complex64::new(0.0, 0.0); stft.n_bins]],
        })
    }

    pub fn weights(&self, ear: Ear) -> &[SteeringVector] {
        &self.weights[ear.index()]
    }
}

impl FrameProcessor for MvdrProcessor {
    fn name(&self) -> &str {
        "mvdr"
    }

    fn n_in_channels(&self) -> usize {
        mic::COUNT
    }

    fn latency(&self) -> usize {
        self.synth[0].latency()
    }

    fn reset(&mut self) {
        self.analyzer.reset();
        self.synth.iter_mut().for_each(StftSynthesizer::reset);
    }

    fn process_block(&mut self, input: &[f64], output: &mut [f64]) {
        let frame = self.analyzer.analyze(input).expect("block shape checked by driver");
        for ear in 0..2 {
            for (k, out) in self.out[ear].iter_mut().enumerate() {
                let w = &self.weights[ear][k];
                *out = (0..mic::COUNT).map(|m| w[m].conj() * frame.channel(m)[k]).sum();
            }
            self.synth[ear]
                .synthesize(&self.out[ear], &mut output[ear * HOP..(ear + 1) * HOP])
                .expect("fixed frame size");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn steering_at_dc_is_all_ones() {
        let d = steering_vector(&ArrayGeometry::default(), 37.0, 0.0, mic::FRONT_LEFT);
        assert!(d.iter().all(|v| (v - c(1.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_front_symmetry() {
        let d = steering_vector(&ArrayGeometry::default(), 0.0, 3000.0, mic::FRONT_LEFT);
        assert!((d[mic::FRONT_LEFT] - d[mic::FRONT_RIGHT]).norm() < 1e-15);
        assert!((d[mic::BACK_LEFT] - d[mic::BACK_RIGHT]).norm() < 1e-15);
        assert!((d[mic::FRONT_LEFT] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn lateral_phase_difference() {
        let g = ArrayGeometry::default();
        let d = steering_vector(&g, 90.0, 1000.0, mic::FRONT_LEFT);
        let phase = -d[mic::FRONT_RIGHT].arg();
        let want = 2.0 * PI * 1000.0 * 0.15 / 343.0;
        assert!((want - 2.748).abs() < 1e-3);
        // wrapped into (-π, π]
        let wrapped = (want + PI).rem_euclid(2.0 * PI) - PI;
        assert!((phase - wrapped).abs() < 1e-12, "{phase} vs {wrapped}");
    }

    #[test]
    fn diffuse_covariance_values() {
        let g = ArrayGeometry::default();
        let dc = diffuse_covariance(&g, 0.0);
        assert!(dc.iter().flatten().all(|v| (v - c(1.0)).norm() < 1e-15));
        let gm = diffuse_covariance(&g, 8000.0);
        let x = 2.0 * PI * 8000.0 * 0.011 / 343.0;
        assert!((x - 1.612).abs() < 1e-3);
        assert!((gm[0][2].re - 0.620).abs() < 1e-3);
        for i in 0..4 {
            assert_eq!(gm[i][i], c(1.0));
            for j in 0..4 {
                assert_eq!(gm[i][j], gm[j][i]);
                assert_eq!(gm[i][j].im, 0.0);
            }
        }
    }

    #[test]
    fn identity_covariance_gives_matched_filter() {
        let mut eye = [[c(0.0); 4]; 4];
        (0..4).for_each(|i| eye[i][i] = c(1.0));
        let w = mvdr_weights(&[c(1.0); 4], &eye, 1e-9).unwrap();
        assert!(w.iter().all(|v| (v - c(0.25)).norm() < 1e-8));
    }

    #[test]
    fn dc_with_small_loading_is_finite_and_distortionless() {
        let g = ArrayGeometry::default();
        let d = steering_vector(&g, 0.0, 0.0, 0);
        let gamma = diffuse_covariance(&g, 0.0);
        let w = mvdr_weights(&d, &gamma, 0.01).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
        assert!((response(&w, &d) - c(1.0)).norm() < 1e-10);
        // direct solve oracle: all-ones Γ + 0.01 I applied to ones gives 1/4.01 each
        for v in w {
            assert!((v - c(0.25)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_loading() {
        let g = ArrayGeometry::default();
        let d = steering_vector(&g, 0.0, 500.0, 0);
        let gamma = diffuse_covariance(&g, 500.0);
        assert!(mvdr_weights(&d, &gamma, 0.0).is_err());
        // Γ + δI collapses to the zero matrix
        let mut neg = [[c(0.0); 4]; 4];
        (0..4).for_each(|i| neg[i][i] = c(-1e-3));
        assert_eq!(mvdr_weights(&d, &neg, 1e-3), Err(Error::Singular));
    }

    #[test]
    fn distortionless_at_every_bin() {
        let p = MvdrProcessor::new(&ArrayGeometry::default(), &MvdrConfig::default()).unwrap();
        let stft = StftConfig::hearing_aid();
        for ear in Ear::BOTH {
            let refm = if ear == Ear::Left { mic::FRONT_LEFT } else { mic::FRONT_RIGHT };
            for (k, w) in p.weights(ear).iter().enumerate() {
                let d = steering_vector(&ArrayGeometry::default(), 0.0, stft.bin_freq(k), refm);
                assert!((response(w, &d) - c(1.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn white_noise_gain_nonnegative() {
        let p = MvdrProcessor::new(&ArrayGeometry::default(), &MvdrConfig::default()).unwrap();
        for w in p.weights(Ear::Left) {
            let norm2: f64 = w.iter().map(|v| v.norm_sqr()).sum();
            assert!(norm2 <= 1.0, "‖w‖² = {norm2}");
        }
    }

    #[test]
    fn mirror_symmetric_weights() {
        let p = MvdrProcessor::new(&ArrayGeometry::default(), &MvdrConfig::default()).unwrap();
        let mirror = [mic::FRONT_RIGHT, mic::FRONT_LEFT, mic::BACK_RIGHT, mic::BACK_LEFT];
        for (wl, wr) in p.weights(Ear::Left).iter().zip(p.weights(Ear::Right)) {
            for m in 0..4 {
                assert!((wl[m] - wr[mirror[m]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn beats_random_constrained_weights_under_unloaded_model() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in [500.0, 2000.0, 6000.0] {
            let d = steering_vector(&g, 0.0, f, 0);
            let gamma = diffuse_covariance(&g, f);
            let w = mvdr_weights(&d, &gamma, 1e-9).unwrap();
            let best = quadratic_form(&w, &gamma) - 1e-9;
            let dn: f64 = d.iter().map(|v| v.norm_sqr()).sum();
            for _ in 0..1000 {
                let mut v = [c(0.0); 4];
                v.iter_mut().for_each(|x| *x = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                // project onto wᴴd = 1
                let r = response(&v, &d);
                let corr = (Complex64::new(1.0, 0.0) - r).conj() / dn;
                for m in 0..4 {
                    v[m] += corr * d[m];
                }
                assert!((response(&v, &d) - c(1.0)).norm() < 1e-10);
                assert!(quadratic_form(&v, &gamma) >= best);
            }
        }
    }
}
