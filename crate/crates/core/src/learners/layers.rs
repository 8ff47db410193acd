//! Recurrent, convolutional and dense layers over flat parameter slices.
//!
//! Each layer reads its weights from a contiguous `&[f64]` and accumulates
//! gradients into a slice of the same shape, so whole networks can live in one
//! vector for optimisation, gradient checking and serialisation.

use serde::{Deserialize, Serialize};

pub(crate) type Seq = Vec<Vec<f64>>;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `out += m · x` for a row-major `rows × x.len()` matrix.
fn matvec_acc(m: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &m[r * cols..(r + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += mᵀ · d`.
fn matvec_t_acc(m: &[f64], d: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, dv) in d.iter().enumerate() {
        if *dv == 0.0 {
            continue;
        }
        let row = &m[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * dv;
        }
    }
}

/// `g += d ⊗ x`.
fn outer_acc(d: &[f64], x: &[f64], g: &mut [f64]) {
    let cols = x.len();
    for (r, dv) in d.iter().enumerate() {
        if *dv == 0.0 {
            continue;
        }
        let row = &mut g[r * cols..(r + 1) * cols];
        for (o, a) in row.iter_mut().zip(x) {
            *o += dv * a;
        }
    }
}

/// Standard LSTM with gate order input, forget, candidate, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmShape {
    pub input: usize,
    pub hidden: usize,
}

pub(crate) struct LstmCache {
    xs: Seq,
    hs: Seq,
    cs: Seq,
    gates: Seq,
}

impl LstmCache {
    pub(crate) fn steps(&self) -> usize {
        self.xs.len()
    }
}

impl LstmShape {
    pub fn param_count(&self) -> usize {
        let h4 = 4 * self.hidden;
        h4 * self.input + h4 * self.hidden + h4
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let h4 = 4 * self.hidden;
        let (w, rest) = p.split_at(h4 * self.input);
        let (u, b) = rest.split_at(h4 * self.hidden);
        (w, u, b)
    }

    /// Hidden states for every step, starting from zero state.
    pub(crate) fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> (Seq, LstmCache) {
        let h = self.hidden;
        let (w, u, b) = self.split(p);
        let mut hs = vec![vec![0.0; h]];
        let mut cs = vec![vec![0.0; h]];
        let mut gates = Vec::with_capacity(xs.len());
        for x in xs {
            let mut z = b.to_vec();
            matvec_acc(w, x, &mut z);
            matvec_acc(u, hs.last().expect("seeded"), &mut z);
            for (k, v) in z.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&k) {
                    v.tanh()
                } else {
                    sigmoid(*v)
                };
            }
            let c_prev = cs.last().expect("seeded");
            let c: Vec<f64> = (0..h)
                .map(|j| z[h + j] * c_prev[j] + z[j] * z[2 * h + j])
                .collect();
            let hn: Vec<f64> = (0..h).map(|j| z[3 * h + j] * c[j].tanh()).collect();
            cs.push(c);
            hs.push(hn);
            gates.push(z);
        }
        let outputs = hs[1..].to_vec();
        (
            outputs,
            LstmCache {
                xs: xs.to_vec(),
                hs,
                cs,
                gates,
            },
        )
    }

    /// Back-propagates per-step output gradients; returns input gradients.
    pub(crate) fn backward(
        &self,
        p: &[f64],
        cache: &LstmCache,
        dhs: &[Vec<f64>],
        grad: &mut [f64],
    ) -> Seq {
        let h = self.hidden;
        let (w, u, _) = self.split(p);
        let h4 = 4 * h;
        let (gw, rest) = grad.split_at_mut(h4 * self.input);
        let (gu, gb) = rest.split_at_mut(h4 * h);
        let steps = cache.xs.len();
        let mut dxs = vec![vec![0.0; self.input]; steps];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; h4];
        for t in (0..steps).rev() {
            let z = &cache.gates[t];
            let c = &cache.cs[t + 1];
            let c_prev = &cache.cs[t];
            for j in 0..h {
                let dh = dhs[t][j] + dh_next[j];
                let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
                let tc = c[j].tanh();
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            outer_acc(&dz, &cache.xs[t], gw);
            outer_acc(&dz, &cache.hs[t], gu);
            for (a, d) in gb.iter_mut().zip(&dz) {
                *a += d;
            }
            matvec_t_acc(w, &dz, &mut dxs[t]);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(u, &dz, &mut dh_next);
        }
        dxs
    }
}

/// GRU with update gate `q`, reset gate `s` and state update
/// `j = (1 - q) * j_prev + q * candidate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GruShape {
    pub input: usize,
    pub hidden: usize,
}

pub(crate) struct GruCache {
    xs: Seq,
    js: Seq,
    q: Seq,
    s: Seq,
    cand: Seq,
}

impl GruShape {
    fn block(&self) -> usize {
        self.hidden * (self.hidden + self.input) + self.hidden
    }

    pub fn param_count(&self) -> usize {
        3 * self.block()
    }

    /// `(weights, bias)` for gate 0 = update, 1 = reset, 2 = candidate.
    fn gate<'a>(&self, p: &'a [f64], k: usize) -> (&'a [f64], &'a [f64]) {
        let blk = &p[k * self.block()..(k + 1) * self.block()];
        blk.split_at(self.hidden * (self.hidden + self.input))
    }

    /// One state transition.
    pub fn cell(&self, p: &[f64], j_prev: &[f64], y: &[f64]) -> Vec<f64> {
        self.cell_parts(p, j_prev, y).0
    }

    fn cell_parts(
        &self,
        p: &[f64],
        j_prev: &[f64],
        y: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let a: Vec<f64> = j_prev.iter().chain(y).copied().collect();
        let affine = |k: usize, inp: &[f64]| {
            let (w, b) = self.gate(p, k);
            let mut z = b.to_vec();
            matvec_acc(w, inp, &mut z);
            z
        };
        let q: Vec<f64> = affine(0, &a).into_iter().map(sigmoid).collect();
        let s: Vec<f64> = affine(1, &a).into_iter().map(sigmoid).collect();
        let a2: Vec<f64> = s
            .iter()
            .zip(j_prev)
            .map(|(s, j)| s * j)
            .chain(y.iter().copied())
            .collect();
        let cand: Vec<f64> = affine(2, &a2).into_iter().map(f64::tanh).collect();
        let j: Vec<f64> = (0..self.hidden)
            .map(|k| (1.0 - q[k]) * j_prev[k] + q[k] * cand[k])
            .collect();
        (j, q, s, cand)
    }

    pub(crate) fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> (Seq, GruCache) {
        let mut cache = GruCache {
            xs: xs.to_vec(),
            js: vec![vec![0.0; self.hidden]],
            q: Vec::new(),
            s: Vec::new(),
            cand: Vec::new(),
        };
        for x in xs {
            let (j, q, s, cand) = self.cell_parts(p, cache.js.last().expect("seeded"), x);
            cache.js.push(j);
            cache.q.push(q);
            cache.s.push(s);
            cache.cand.push(cand);
        }
        (cache.js[1..].to_vec(), cache)
    }

    pub(crate) fn backward(
        &self,
        p: &[f64],
        cache: &GruCache,
        dhs: &[Vec<f64>],
        grad: &mut [f64],
    ) -> Seq {
        let h = self.hidden;
        let blk = self.block();
        let nw = h * (h + self.input);
        let steps = cache.xs.len();
        let mut dxs = vec![vec![0.0; self.input]; steps];
        let mut dj_next = vec![0.0; h];
        for t in (0..steps).rev() {
            let j_prev = &cache.js[t];
            let (q, s, cand) = (&cache.q[t], &cache.s[t], &cache.cand[t]);
            let x = &cache.xs[t];
            let dj: Vec<f64> = (0..h).map(|k| dhs[t][k] + dj_next[k]).collect();
            let mut dj_prev: Vec<f64> = (0..h).map(|k| dj[k] * (1.0 - q[k])).collect();

            // candidate branch
            let dzc: Vec<f64> = (0..h)
                .map(|k| dj[k] * q[k] * (1.0 - cand[k] * cand[k]))
                .collect();
            let a2: Vec<f64> = s
                .iter()
                .zip(j_prev)
                .map(|(s, j)| s * j)
                .chain(x.iter().copied())
                .collect();
            let (wc, _) = self.gate(p, 2);
            {
                let g = &mut grad[2 * blk..3 * blk];
                let (gw, gb) = g.split_at_mut(nw);
                outer_acc(&dzc, &a2, gw);
                gb.iter_mut().zip(&dzc).for_each(|(a, d)| *a += d);
            }
            let mut da2 = vec![0.0; h + self.input];
            matvec_t_acc(wc, &dzc, &mut da2);
            let dsj = &da2[..h];
            for k in 0..h {
                dj_prev[k] += dsj[k] * s[k];
            }
            for (d, v) in dxs[t].iter_mut().zip(&da2[h..]) {
                *d += v;
            }

            // gates read a = [j_prev, x]
            let a: Vec<f64> = j_prev.iter().chain(x).copied().collect();
            let dzq: Vec<f64> = (0..h)
                .map(|k| dj[k] * (cand[k] - j_prev[k]) * q[k] * (1.0 - q[k]))
                .collect();
            let dzs: Vec<f64> = (0..h)
                .map(|k| dsj[k] * j_prev[k] * s[k] * (1.0 - s[k]))
                .collect();
            for (gate, dz) in [(0usize, &dzq), (1, &dzs)] {
                let (w, _) = self.gate(p, gate);
                {
                    let g = &mut grad[gate * blk..(gate + 1) * blk];
                    let (gw, gb) = g.split_at_mut(nw);
                    outer_acc(dz, &a, gw);
                    gb.iter_mut().zip(dz.iter()).for_each(|(a, d)| *a += d);
                }
                let mut da = vec![0.0; h + self.input];
                matvec_t_acc(w, dz, &mut da);
                for k in 0..h {
                    dj_prev[k] += da[k];
                }
                for (d, v) in dxs[t].iter_mut().zip(&da[h..]) {
                    *d += v;
                }
            }
            dj_next = dj_prev;
        }
        dxs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Self::Linear => z,
            Self::Tanh => z.tanh(),
            Self::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activated value.
    fn slope(self, a: f64) -> f64 {
        match self {
            Self::Linear => 1.0,
            Self::Tanh => 1.0 - a * a,
            Self::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Valid (unpadded, stride 1) 1-D convolution along the time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvShape {
    pub input: usize,
    pub channels: usize,
    pub kernel: usize,
    pub activation: Activation,
}

impl ConvShape {
    pub fn param_count(&self) -> usize {
        self.channels * self.kernel * self.input + self.channels
    }

    pub fn output_len(&self, steps: usize) -> usize {
        steps + 1 - self.kernel
    }

    pub(crate) fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> Seq {
        let nk = self.kernel * self.input;
        let (k, b) = p.split_at(self.channels * nk);
        (0..self.output_len(xs.len()))
            .map(|t| {
                (0..self.channels)
                    .map(|c| {
                        let mut z = b[c];
                        for tap in 0..self.kernel {
                            let w = &k[c * nk + tap * self.input..c * nk + (tap + 1) * self.input];
                            z += w.iter().zip(&xs[t + tap]).map(|(a, x)| a * x).sum::<f64>();
                        }
                        self.activation.apply(z)
                    })
                    .collect()
            })
            .collect()
    }

    pub(crate) fn backward(
        &self,
        p: &[f64],
        xs: &[Vec<f64>],
        out: &[Vec<f64>],
        douts: &[Vec<f64>],
        grad: &mut [f64],
    ) -> Seq {
        let nk = self.kernel * self.input;
        let (k, _) = p.split_at(self.channels * nk);
        let (gk, gb) = grad.split_at_mut(self.channels * nk);
        let mut dxs = vec![vec![0.0; self.input]; xs.len()];
        for (t, (o, d)) in out.iter().zip(douts).enumerate() {
            for c in 0..self.channels {
                let dz = d[c] * self.activation.slope(o[c]);
                if dz == 0.0 {
                    continue;
                }
                gb[c] += dz;
                for tap in 0..self.kernel {
                    let off = c * nk + tap * self.input;
                    for i in 0..self.input {
                        gk[off + i] += dz * xs[t + tap][i];
                        dxs[t + tap][i] += dz * k[off + i];
                    }
                }
            }
        }
        dxs
    }
}

/// Scalar affine read-out `w · x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseShape {
    pub input: usize,
}

impl DenseShape {
    pub fn param_count(&self) -> usize {
        self.input + 1
    }

    pub(crate) fn forward(&self, p: &[f64], x: &[f64]) -> f64 {
        p[self.input]
            + p[..self.input]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub(crate) fn backward(&self, p: &[f64], x: &[f64], dy: f64, grad: &mut [f64]) -> Vec<f64> {
        for (g, v) in grad[..self.input].iter_mut().zip(x) {
            *g += dy * v;
        }
        grad[self.input] += dy;
        p[..self.input].iter().map(|w| w * dy).collect()
    }
}
