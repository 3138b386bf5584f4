use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Dot product with independent partial sums so the compiler can use SIMD.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `tanh(xᵀ·W + b)` with `W` laid out `[n_in, n_out]`.
pub fn fc_tanh(x: &[f64], weightmat: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    let (n_in, n_out) = (x.len(), bias.len());
    if weightmat.len() != n_in * n_out {
        return Err(Error::LengthMismatch { expected: n_in * n_out, found: weightmat.len() });
    }
    Ok((0..n_out)
        .map(|j| {
            let s: f64 = (0..n_in).map(|i| x[i] * weightmat[i * n_out + j]).sum();
            (s + bias[j]).tanh()
        })
        .collect())
}

/// Fully connected layer, weights stored `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(n_in: usize, n_out: usize, weight: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weight.len(), n_in * n_out, "dense weight shape");
        assert_eq!(bias.len(), n_out, "dense bias shape");
        Self { n_in, n_out, weight, bias }
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self::new(n_in, n_out, vec![0.0; n_in * n_out], vec![0.0; n_out])
    }

    /// `out = W·x + b`.
    pub fn affine(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_in);
        for (o, (row, b)) in out.iter_mut().zip(self.weight.chunks_exact(self.n_in).zip(&self.bias)) {
            *o = dot(row, x) + b;
        }
    }

    pub fn forward_tanh(&self, x: &[f64], out: &mut [f64]) {
        self.affine(x, out);
        out.iter_mut().for_each(|v| *v = v.tanh());
    }
}

/// Per-stream history of the last `k − 1` inputs of a causal convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    /// `taps[j]` holds the input `j + 1` frames back.
    taps: Vec<Vec<f64>>,
}

impl DelayLine {
    pub fn new(kernel_size: usize, width: usize) -> Self {
        Self { taps: vec![vec![0.0; width]; kernel_size.saturating_sub(1)] }
    }

    pub fn reset(&mut self) {
        self.taps.iter_mut().flatten().for_each(|v| *v = 0.0);
    }

    fn push(&mut self, x: &[f64]) {
        if self.taps.is_empty() {
            return;
        }
        self.taps.rotate_right(1);
        self.taps[0].copy_from_slice(x);
    }

    fn past(&self, j: usize) -> &[f64] {
        &self.taps[j - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.taps.iter().flatten().all(|v| v.is_finite())
    }
}

/// Causal depthwise-separable convolution over time followed by tanh.
#[derive(Debug, Clone, PartialEq)]
pub struct DsConv {
    pub width: usize,
    pub kernel_size: usize,
    /// `[width, kernel_size]`, tap `j` multiplies the input `j` frames back.
    pub depthwise: Vec<f64>,
    pub pointwise: Dense,
}

impl DsConv {
    pub fn new(width: usize, kernel_size: usize, depthwise: Vec<f64>, pointwise: Dense) -> Self {
        assert_eq!(depthwise.len(), width * kernel_size, "depthwise kernel shape");
        assert_eq!((pointwise.n_in, pointwise.n_out), (width, width), "pointwise shape");
        Self { width, kernel_size, depthwise, pointwise }
    }

    pub fn zeros(width: usize, kernel_size: usize) -> Self {
        Self::new(width, kernel_size, vec![0.0; width * kernel_size], Dense::zeros(width, width))
    }

    pub fn delay_line(&self) -> DelayLine {
        DelayLine::new(self.kernel_size, self.width)
    }

    /// One time step; `scratch` must hold `width` values.
    pub fn step(&self, line: &mut DelayLine, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let k = self.kernel_size;
        for c in 0..self.width {
            let taps = &self.depthwise[c * k..(c + 1) * k];
            let mut acc = taps[0] * x[c];
            for (j, &t) in taps.iter().enumerate().skip(1) {
                acc += t * line.past(j)[c];
            }
            scratch[c] = acc;
        }
        line.push(x);
        self.pointwise.forward_tanh(scratch, out);
    }
}

/// Gated recurrent unit; gates stacked as (update, reset, candidate).
#[derive(Debug, Clone, PartialEq)]
pub struct Gru {
    pub hidden: usize,
    pub w_ih: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gru {
    pub fn new(hidden: usize, w_ih: Vec<f64>, w_hh: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(w_ih.len(), 3 * hidden * hidden, "GRU input weights");
        assert_eq!(w_hh.len(), 3 * hidden * hidden, "GRU recurrent weights");
        assert_eq!(bias.len(), 3 * hidden, "GRU bias");
        Self { hidden, w_ih, w_hh, bias }
    }

    pub fn zeros(hidden: usize) -> Self {
        let n = 3 * hidden * hidden;
        Self::new(hidden, vec![0.0; n], vec![0.0; n], vec![0.0; 3 * hidden])
    }

    fn row(w: &[f64], u: usize, gate: usize, i: usize) -> &[f64] {
        let r = gate * u + i;
        &w[r * u..(r + 1) * u]
    }

    /// Updates `h` in place; `scratch` must hold `3 * hidden` values.
    pub fn step(&self, h: &mut [f64], x: &[f64], scratch: &mut [f64]) {
        let u = self.hidden;
        let (z, rest) = scratch.split_at_mut(u);
        let (rh, cand) = rest.split_at_mut(u);
        for i in 0..u {
            let r = sigmoid(dot(Self::row(&self.w_ih, u, 1, i), x) + dot(Self::row(&self.w_hh, u, 1, i), h) + self.bias[u + i]);
            rh[i] = r * h[i];
            z[i] = sigmoid(dot(Self::row(&self.w_ih, u, 0, i), x) + dot(Self::row(&self.w_hh, u, 0, i), h) + self.bias[i]);
        }
        // candidate needs the full r∘h before h is overwritten
        for i in 0..u {
            let a = dot(Self::row(&self.w_ih, u, 2, i), x) + dot(Self::row(&self.w_hh, u, 2, i), rh) + self.bias[2 * u + i];
            cand[i] = a.tanh();
        }
        for i in 0..u {
            h[i] = (1.0 - z[i]) * h[i] + z[i] * cand[i];
        }
    }
}

/// Group communication with group mixing.
///
/// Each group is mapped `U → P/G` (shared weights, tanh), the groups are
/// concatenated and mixed by a `P × P` layer (tanh), split again and mapped
/// back `P/G → U` (shared, tanh). The block input is added to its output.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupComm {
    pub groups: usize,
    pub down: Dense,
    pub mix: Dense,
    pub up: Dense,
}

impl GroupComm {
    pub fn new(groups: usize, down: Dense, mix: Dense, up: Dense) -> Self {
        let (u, pg) = (down.n_in, down.n_out);
        assert_eq!((mix.n_in, mix.n_out), (pg * groups, pg * groups), "mixing shape");
        assert_eq!((up.n_in, up.n_out), (pg, u), "up-projection shape");
        Self { groups, down, mix, up }
    }

    pub fn zeros(groups: usize, hidden: usize, group_size: usize) -> Self {
        let p = groups * group_size;
        Self::new(
            groups,
            Dense::zeros(hidden, group_size),
            Dense::zeros(p, p),
            Dense::zeros(group_size, hidden),
        )
    }

    /// `x` holds `groups × U` values and is updated in place. `scratch`
    /// must hold `2P + U` values.
    pub fn forward(&self, x: &mut [f64], scratch: &mut [f64]) {
        let (u, pg) = (self.down.n_in, self.down.n_out);
        let p = pg * self.groups;
        let (cat, rest) = scratch.split_at_mut(p);
        let (mixed, up) = rest.split_at_mut(p);
        for g in 0..self.groups {
            self.down.forward_tanh(&x[g * u..(g + 1) * u], &mut cat[g * pg..(g + 1) * pg]);
        }
        self.mix.forward_tanh(cat, mixed);
        for g in 0..self.groups {
            let up = &mut up[..u];
            self.up.forward_tanh(&mixed[g * pg..(g + 1) * pg], up);
            for (xi, ui) in x[g * u..(g + 1) * u].iter_mut().zip(up.iter()) {
                *xi += ui;
            }
        }
    }
}
