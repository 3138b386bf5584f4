use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Iterative radix-2 complex FFT of a fixed power-of-two size.
///
/// Both directions are unnormalized; callers scale the inverse.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Fft {
    /// Panics if `n` is not a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT size must be a power of two, got {n}");
        let twiddles = (0..n / 2)
            .map(|k| {
                let phi = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(phi.cos(), phi.sin())
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Self { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X[k] = sum_n x[n] e^{-j2πkn/N}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    /// In-place inverse transform without the `1/N` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n, "FFT buffer length");
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (i, &v)| {
                    let phi = -2.0 * PI * (k * i % n) as f64 / n as f64;
                    acc + v * Complex64::new(phi.cos(), phi.sin())
                })
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        for n in [1usize, 2, 8, 128] {
            let x: Vec<_> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() - 0.2))
                .collect();
            let mut y = x.clone();
            Fft::new(n).forward(&mut y);
            for (a, b) in y.iter().zip(dft(&x)) {
                assert!((a - b).norm() < 1e-10 * n as f64);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let fft = Fft::new(64);
        let x: Vec<_> = (0..64).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut y = x.clone();
        fft.forward(&mut y);
        fft.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / 64.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    #[should_panic]
    fn rejects_non_power_of_two() {
        let _ = Fft::new(96);
    }
}
