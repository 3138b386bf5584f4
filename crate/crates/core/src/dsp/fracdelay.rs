use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

const KAISER_BETA: f64 = 8.0;

fn bessel_i0(x: f64) -> f64 {
    let (mut sum, mut term, half) = (1.0, 1.0, x / 2.0);
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn kaiser(u: f64, half_len: f64) -> f64 {
    let r = u / half_len;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA)
}

/// Kaiser-windowed sinc interpolator for a delay of `delay` samples.
///
/// Returns `(first, taps)` such that `y[n] = Σ_j taps[j] · x[n − first − j]`.
/// There are `2 · half_width` taps around the delay, the window is centered
/// on the delay itself and the taps are normalized to unit DC gain. An
/// integer delay yields a single unit tap.
pub fn sinc_taps(delay: f64, half_width: usize) -> (i64, Vec<f64>) {
    let base = delay.floor() as i64;
    let first = base - half_width as i64 + 1;
    let half_len = half_width as f64 + 0.5;
    let mut taps: Vec<f64> = (0..2 * half_width)
        .map(|j| {
            let u = (first + j as i64) as f64 - delay;
            let s = if u.abs() < 1e-12 {
                1.0
            } else if (u - u.round()).abs() < 1e-12 {
                0.0
            } else {
                (PI * u).sin() / (PI * u)
            };
            s * kaiser(u, half_len)
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    (first, taps)
}

/// Streaming causal fractional delay line.
#[derive(Debug, Clone)]
pub struct FractionalDelay {
    delay: f64,
    first: usize,
    taps: Vec<f64>,
    line: Vec<f64>,
    pos: usize,
}

impl FractionalDelay {
    /// `delay` must be at least `half_width - 1` so the filter stays causal.
    pub fn new(delay: f64, half_width: usize) -> Option<Self> {
        let (first, taps) = sinc_taps(delay, half_width);
        if first < 0 {
            return None;
        }
        let first = first as usize;
        let len = first + taps.len();
        Some(Self { delay, first, taps, line: vec![0.0; len], pos: 0 })
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn reset(&mut self) {
        self.line.iter_mut().for_each(|x| *x = 0.0);
        self.pos = 0;
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let len = self.line.len();
        self.pos = (self.pos + 1) % len;
        self.line[self.pos] = x;
        let mut acc = 0.0;
        for (j, &t) in self.taps.iter().enumerate() {
            let lag = self.first + j;
            acc += t * self.line[(self.pos + len - lag) % len];
        }
        acc
    }
}

/// Offline (non-causal allowed) fractional delay of a whole signal; the
/// output has the same length as the input.
pub(crate) fn delay_signal(x: &[f64], delay: f64, half_width: usize) -> Vec<f64> {
    let (first, taps) = sinc_taps(delay, half_width);
    let n = x.len() as i64;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &t) in taps.iter().enumerate() {
                let k = i - first - j as i64;
                if (0..n).contains(&k) {
                    acc += t * x[k as usize];
                }
            }
            acc
        })
        .collect()
}
