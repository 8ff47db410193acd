//! Sequence-to-scalar networks built from [`layers`](super::layers).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Activation, ConvShape, DenseShape, GruShape, LstmShape, Seq};
use crate::error::{Error, Result};

/// Stacked bidirectional LSTM whose read-out sees the last forward state
/// concatenated with the backward state after the whole sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstmNet {
    pub input: usize,
    pub hidden: Vec<usize>,
}

/// Convolution front end followed by stacked GRUs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnGruNet {
    pub conv: ConvShape,
    pub hidden: Vec<usize>,
}

/// Stacked single-direction LSTM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmNet {
    pub input: usize,
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "snake_case")]
pub enum Net {
    BiLstm(BiLstmNet),
    CnnGru(CnnGruNet),
    Lstm(LstmNet),
}

/// Forward state kept for the backward pass.
pub(crate) enum Trace {
    BiLstm {
        layers: Vec<(super::layers::LstmCache, super::layers::LstmCache)>,
        top: Vec<f64>,
        steps: usize,
    },
    CnnGru {
        xs: Seq,
        conv_out: Seq,
        layers: Vec<super::layers::GruCache>,
        top: Vec<f64>,
    },
    Lstm {
        layers: Vec<super::layers::LstmCache>,
        top: Vec<f64>,
    },
}

fn lstm_stack(input: usize, hidden: &[usize], widen: usize) -> Vec<LstmShape> {
    let mut width = input;
    hidden
        .iter()
        .map(|&h| {
            let s = LstmShape {
                input: width,
                hidden: h,
            };
            width = widen * h;
            s
        })
        .collect()
}

fn gru_stack(input: usize, hidden: &[usize]) -> Vec<GruShape> {
    let mut width = input;
    hidden
        .iter()
        .map(|&h| {
            let s = GruShape {
                input: width,
                hidden: h,
            };
            width = h;
            s
        })
        .collect()
}

/// Splits `p` into consecutive chunks of the given sizes.
fn chunks<'a>(mut p: &'a [f64], sizes: &[usize]) -> Vec<&'a [f64]> {
    sizes
        .iter()
        .map(|&n| {
            let (a, b) = p.split_at(n);
            p = b;
            a
        })
        .collect()
}

fn chunks_mut<'a>(mut p: &'a mut [f64], sizes: &[usize]) -> Vec<&'a mut [f64]> {
    sizes
        .iter()
        .map(|&n| {
            let (a, b) = std::mem::take(&mut p).split_at_mut(n);
            p = b;
            a
        })
        .collect()
}

impl BiLstmNet {
    fn layers(&self) -> Vec<LstmShape> {
        lstm_stack(self.input, &self.hidden, 2)
    }

    fn sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .layers()
            .iter()
            .flat_map(|l| [l.param_count(), l.param_count()])
            .collect();
        v.push(self.dense().param_count());
        v
    }

    fn dense(&self) -> DenseShape {
        DenseShape {
            input: 2 * self.hidden.last().copied().unwrap_or(0),
        }
    }

    /// Concatenated (forward, backward) top-layer state fed to the read-out.
    pub fn state(&self, p: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
        let (_, trace) = self.forward(p, xs);
        match trace {
            Trace::BiLstm { top, .. } => top,
            _ => unreachable!(),
        }
    }

    fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> (f64, Trace) {
        let sizes = self.sizes();
        let parts = chunks(p, &sizes);
        let steps = xs.len();
        let mut seq: Seq = xs.to_vec();
        let mut caches = Vec::new();
        let mut top = Vec::new();
        for (l, shape) in self.layers().iter().enumerate() {
            let (fwd, fc) = shape.forward(parts[2 * l], &seq);
            let rev: Seq = seq.iter().rev().cloned().collect();
            let (bwd, bc) = shape.forward(parts[2 * l + 1], &rev);
            top = fwd[steps - 1]
                .iter()
                .chain(&bwd[steps - 1])
                .copied()
                .collect();
            seq = (0..steps)
                .map(|t| fwd[t].iter().chain(&bwd[steps - 1 - t]).copied().collect())
                .collect();
            caches.push((fc, bc));
        }
        let y = self.dense().forward(parts[parts.len() - 1], &top);
        (
            y,
            Trace::BiLstm {
                layers: caches,
                top,
                steps,
            },
        )
    }

    fn backward(&self, p: &[f64], trace: &Trace, dy: f64, grad: &mut [f64]) {
        let Trace::BiLstm {
            layers: caches,
            top,
            steps,
        } = trace
        else {
            unreachable!()
        };
        let steps = *steps;
        let sizes = self.sizes();
        let parts = chunks(p, &sizes);
        let mut gparts = chunks_mut(grad, &sizes);
        let nl = caches.len();
        let dtop = self
            .dense()
            .backward(parts[2 * nl], top, dy, gparts[2 * nl]);
        let shapes = self.layers();
        let h = shapes[nl - 1].hidden;
        let mut dfwd = vec![vec![0.0; h]; steps];
        let mut dbwd = vec![vec![0.0; h]; steps];
        dfwd[steps - 1].copy_from_slice(&dtop[..h]);
        dbwd[steps - 1].copy_from_slice(&dtop[h..]);
        for l in (0..nl).rev() {
            let shape = shapes[l];
            let (fc, bc) = &caches[l];
            let (gf, gb) = {
                let (a, b) = gparts.split_at_mut(2 * l + 1);
                (&mut a[2 * l], &mut b[0])
            };
            let dx_f = shape.backward(parts[2 * l], fc, &dfwd, gf);
            let dx_b = shape.backward(parts[2 * l + 1], bc, &dbwd, gb);
            if l == 0 {
                break;
            }
            let hp = shapes[l - 1].hidden;
            dfwd = vec![vec![0.0; hp]; steps];
            dbwd = vec![vec![0.0; hp]; steps];
            for t in 0..steps {
                let d: Vec<f64> = dx_f[t]
                    .iter()
                    .zip(&dx_b[steps - 1 - t])
                    .map(|(a, b)| a + b)
                    .collect();
                dfwd[t].copy_from_slice(&d[..hp]);
                dbwd[steps - 1 - t].copy_from_slice(&d[hp..]);
            }
        }
    }
}

impl CnnGruNet {
    fn layers(&self) -> Vec<GruShape> {
        gru_stack(self.conv.channels, &self.hidden)
    }

    fn dense(&self) -> DenseShape {
        DenseShape {
            input: self.hidden.last().copied().unwrap_or(0),
        }
    }

    fn sizes(&self) -> Vec<usize> {
        let mut v = vec![self.conv.param_count()];
        v.extend(self.layers().iter().map(|l| l.param_count()));
        v.push(self.dense().param_count());
        v
    }

    fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> (f64, Trace) {
        let parts = chunks(p, &self.sizes());
        let conv_out = self.conv.forward(parts[0], xs);
        let mut seq = conv_out.clone();
        let mut caches = Vec::new();
        for (l, shape) in self.layers().iter().enumerate() {
            let (out, c) = shape.forward(parts[1 + l], &seq);
            seq = out;
            caches.push(c);
        }
        let top = seq.last().expect("non-empty").clone();
        let y = self.dense().forward(parts[parts.len() - 1], &top);
        (
            y,
            Trace::CnnGru {
                xs: xs.to_vec(),
                conv_out,
                layers: caches,
                top,
            },
        )
    }

    fn backward(&self, p: &[f64], trace: &Trace, dy: f64, grad: &mut [f64]) {
        let Trace::CnnGru {
            xs,
            conv_out,
            layers: caches,
            top,
        } = trace
        else {
            unreachable!()
        };
        let sizes = self.sizes();
        let parts = chunks(p, &sizes);
        let mut gparts = chunks_mut(grad, &sizes);
        let nl = caches.len();
        let dtop = self
            .dense()
            .backward(parts[nl + 1], top, dy, gparts[nl + 1]);
        let steps = conv_out.len();
        let shapes = self.layers();
        let mut dseq = vec![vec![0.0; shapes[nl - 1].hidden]; steps];
        dseq[steps - 1] = dtop;
        for l in (0..nl).rev() {
            dseq = shapes[l].backward(parts[1 + l], &caches[l], &dseq, gparts[1 + l]);
        }
        self.conv.backward(parts[0], xs, conv_out, &dseq, gparts[0]);
    }
}

impl LstmNet {
    fn layers(&self) -> Vec<LstmShape> {
        lstm_stack(self.input, &self.hidden, 1)
    }

    fn dense(&self) -> DenseShape {
        DenseShape {
            input: self.hidden.last().copied().unwrap_or(0),
        }
    }

    fn sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.layers().iter().map(|l| l.param_count()).collect();
        v.push(self.dense().param_count());
        v
    }

    fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> (f64, Trace) {
        let parts = chunks(p, &self.sizes());
        let mut seq: Seq = xs.to_vec();
        let mut caches = Vec::new();
        for (l, shape) in self.layers().iter().enumerate() {
            let (out, c) = shape.forward(parts[l], &seq);
            seq = out;
            caches.push(c);
        }
        let top = seq.last().expect("non-empty").clone();
        let y = self.dense().forward(parts[parts.len() - 1], &top);
        (
            y,
            Trace::Lstm {
                layers: caches,
                top,
            },
        )
    }

    fn backward(&self, p: &[f64], trace: &Trace, dy: f64, grad: &mut [f64]) {
        let Trace::Lstm {
            layers: caches,
            top,
        } = trace
        else {
            unreachable!()
        };
        let sizes = self.sizes();
        let parts = chunks(p, &sizes);
        let mut gparts = chunks_mut(grad, &sizes);
        let nl = caches.len();
        let dtop = self.dense().backward(parts[nl], top, dy, gparts[nl]);
        let shapes = self.layers();
        let steps = caches[nl - 1].steps();
        let mut dseq = vec![vec![0.0; shapes[nl - 1].hidden]; steps];
        dseq[steps - 1] = dtop;
        for l in (0..nl).rev() {
            dseq = shapes[l].backward(parts[l], &caches[l], &dseq, gparts[l]);
        }
    }
}

impl Net {
    pub fn bilstm(input: usize, hidden: &[usize]) -> Self {
        Self::BiLstm(BiLstmNet {
            input,
            hidden: hidden.to_vec(),
        })
    }

    pub fn cnn_gru(
        input: usize,
        channels: usize,
        kernel: usize,
        activation: Activation,
        hidden: &[usize],
    ) -> Self {
        Self::CnnGru(CnnGruNet {
            conv: ConvShape {
                input,
                channels,
                kernel,
                activation,
            },
            hidden: hidden.to_vec(),
        })
    }

    pub fn lstm(input: usize, hidden: &[usize]) -> Self {
        Self::Lstm(LstmNet {
            input,
            hidden: hidden.to_vec(),
        })
    }

    pub fn input_width(&self) -> usize {
        match self {
            Self::BiLstm(n) => n.input,
            Self::CnnGru(n) => n.conv.input,
            Self::Lstm(n) => n.input,
        }
    }

    fn hidden(&self) -> &[usize] {
        match self {
            Self::BiLstm(n) => &n.hidden,
            Self::CnnGru(n) => &n.hidden,
            Self::Lstm(n) => &n.hidden,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::BiLstm(n) => n.sizes().iter().sum(),
            Self::CnnGru(n) => n.sizes().iter().sum(),
            Self::Lstm(n) => n.sizes().iter().sum(),
        }
    }

    /// Uniform(-0.08, 0.08) initial parameters.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.param_count())
            .map(|_| rng.random_range(-0.08..0.08))
            .collect()
    }

    pub fn validate(&self, xs: &[Vec<f64>]) -> Result<()> {
        if self.hidden().is_empty() || self.hidden().contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden sizes must be non-empty and positive".into(),
            ));
        }
        if xs.is_empty() {
            return Err(Error::SequenceTooShort { len: 0, kernel: 1 });
        }
        if let Some(bad) = xs.iter().find(|x| x.len() != self.input_width()) {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                got: bad.len(),
            });
        }
        if let Self::CnnGru(n) = self {
            if xs.len() < n.conv.kernel {
                return Err(Error::SequenceTooShort {
                    len: xs.len(),
                    kernel: n.conv.kernel,
                });
            }
        }
        Ok(())
    }

    fn check_params(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, p: &[f64], xs: &[Vec<f64>]) -> Result<f64> {
        self.check_params(p)?;
        self.validate(xs)?;
        Ok(self.forward(p, xs).0)
    }

    pub(crate) fn forward(&self, p: &[f64], xs: &[Vec<f64>]) -> (f64, Trace) {
        match self {
            Self::BiLstm(n) => n.forward(p, xs),
            Self::CnnGru(n) => n.forward(p, xs),
            Self::Lstm(n) => n.forward(p, xs),
        }
    }

    pub(crate) fn backward(&self, p: &[f64], trace: &Trace, dy: f64, grad: &mut [f64]) {
        match self {
            Self::BiLstm(n) => n.backward(p, trace, dy, grad),
            Self::CnnGru(n) => n.backward(p, trace, dy, grad),
            Self::Lstm(n) => n.backward(p, trace, dy, grad),
        }
    }

    /// Mean squared error over a batch and its gradient.
    pub fn loss_and_grad(&self, p: &[f64], xs: &[Seq], ys: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_params(p)?;
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch(xs.len(), ys.len()));
        }
        for x in xs {
            self.validate(x)?;
        }
        let mut grad = vec![0.0; p.len()];
        let mut loss = 0.0;
        let n = ys.len() as f64;
        for (x, y) in xs.iter().zip(ys) {
            let (pred, trace) = self.forward(p, x);
            let e = pred - y;
            loss += e * e / n;
            self.backward(p, &trace, 2.0 * e / n, &mut grad);
        }
        Ok((loss, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::layers::sigmoid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_seq<R: Rng>(rng: &mut R, steps: usize, width: usize) -> Seq {
        (0..steps)
            .map(|_| (0..width).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / norm(a).max(norm(b)).max(1e-12)
    }

    fn numeric_grad(net: &Net, p: &[f64], xs: &[Seq], ys: &[f64]) -> Vec<f64> {
        let h = 1e-5;
        (0..p.len())
            .map(|i| {
                let mut q = p.to_vec();
                q[i] += h;
                let up = net.loss_and_grad(&q, xs, ys).unwrap().0;
                q[i] -= 2.0 * h;
                let down = net.loss_and_grad(&q, xs, ys).unwrap().0;
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn check_gradients(make: impl Fn(usize) -> Net, instances: u64) {
        for seed in 0..instances {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let width = 2 + (seed as usize % 2);
            let net = make(width);
            let p: Vec<f64> = (0..net.param_count())
                .map(|_| rng.random_range(-0.5..0.5))
                .collect();
            let xs: Vec<Seq> = (0..3).map(|_| rand_seq(&mut rng, 3, width)).collect();
            let ys: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = net.loss_and_grad(&p, &xs, &ys).unwrap();
            let n = numeric_grad(&net, &p, &xs, &ys);
            let e = rel_err(&g, &n);
            assert!(e < 1e-4, "seed {seed}: relative error {e}");
        }
    }

    #[test]
    fn bilstm_gradients() {
        check_gradients(|w| Net::bilstm(w, &[2]), 20);
        check_gradients(|w| Net::bilstm(w, &[2, 2]), 5);
    }

    #[test]
    fn cnn_gru_gradients() {
        check_gradients(|w| Net::cnn_gru(w, 2, 2, Activation::Tanh, &[2]), 20);
        check_gradients(|w| Net::cnn_gru(w, 2, 2, Activation::Linear, &[2, 2]), 5);
    }

    #[test]
    fn lstm_gradients() {
        check_gradients(|w| Net::lstm(w, &[2]), 20);
        check_gradients(|w| Net::lstm(w, &[2, 2]), 5);
    }

    #[test]
    fn zero_network_predicts_zero() {
        let xs = rand_seq(&mut ChaCha8Rng::seed_from_u64(1), 4, 3);
        for net in [
            Net::bilstm(3, &[4, 2]),
            Net::lstm(3, &[4]),
            Net::cnn_gru(3, 4, 3, Activation::Tanh, &[2]),
        ] {
            let p = vec![0.0; net.param_count()];
            assert_eq!(net.predict(&p, &xs).unwrap(), 0.0);
        }
    }

    #[test]
    fn reversal_swaps_directions_when_tied() {
        let net = BiLstmNet {
            input: 2,
            hidden: vec![3],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = LstmShape {
            input: 2,
            hidden: 3,
        };
        let half: Vec<f64> = (0..shape.param_count())
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        let mut p = half.clone();
        p.extend(&half);
        p.extend(vec![0.1; 7]);
        let xs = rand_seq(&mut rng, 4, 2);
        let rev: Seq = xs.iter().rev().cloned().collect();
        let a = net.state(&p, &xs);
        let b = net.state(&p, &rev);
        assert_eq!(&a[..3], &b[3..]);
        assert_eq!(&a[3..], &b[..3]);
    }

    // straight-line single-layer BiLSTM with 1 hidden unit per direction
    fn bilstm_reference(p: &[f64], xs: &Seq) -> f64 {
        let run = |q: &[f64], seq: Vec<&Vec<f64>>| {
            // q layout: W (4 x 2), U (4 x 1), b (4)
            let (mut h, mut c) = (0.0, 0.0);
            for x in seq {
                let z = |k: usize| q[2 * k] * x[0] + q[2 * k + 1] * x[1] + q[8 + k] * h + q[12 + k];
                let i = sigmoid(z(0));
                let f = sigmoid(z(1));
                let g = z(2).tanh();
                let o = sigmoid(z(3));
                c = f * c + i * g;
                h = o * c.tanh();
            }
            h
        };
        let hf = run(&p[0..16], xs.iter().collect());
        let hb = run(&p[16..32], xs.iter().rev().collect());
        p[32] * hf + p[33] * hb + p[34]
    }

    #[test]
    fn bilstm_matches_reference() {
        let net = Net::bilstm(2, &[1]);
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let p = net
                .init(&mut rng)
                .iter()
                .map(|v| v * 10.0)
                .collect::<Vec<_>>();
            let xs = rand_seq(&mut rng, 3, 2);
            let got = net.predict(&p, &xs).unwrap();
            assert!((got - bilstm_reference(&p, &xs)).abs() < 1e-10);
        }
    }

    // straight-line conv (1 channel, kernel 2) + 1-unit GRU
    fn cnn_gru_reference(p: &[f64], xs: &Seq) -> f64 {
        // conv: k[tap][i] for tap 0..2, i 0..2, then bias
        let conv: Vec<f64> = (0..xs.len() - 1)
            .map(|t| {
                (p[0] * xs[t][0]
                    + p[1] * xs[t][1]
                    + p[2] * xs[t + 1][0]
                    + p[3] * xs[t + 1][1]
                    + p[4])
                    .tanh()
            })
            .collect();
        // gru blocks of 3: [w_j, w_y, b]
        let g = &p[5..14];
        let mut j = 0.0;
        for y in conv {
            let q = sigmoid(g[0] * j + g[1] * y + g[2]);
            let s = sigmoid(g[3] * j + g[4] * y + g[5]);
            let cand = (g[6] * s * j + g[7] * y + g[8]).tanh();
            j = (1.0 - q) * j + q * cand;
        }
        p[14] * j + p[15]
    }

    #[test]
    fn cnn_gru_matches_reference() {
        let net = Net::cnn_gru(2, 1, 2, Activation::Tanh, &[1]);
        assert_eq!(net.param_count(), 16);
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let p: Vec<f64> = (0..16).map(|_| rng.random_range(-1.5..1.5)).collect();
            let xs = rand_seq(&mut rng, 4, 2);
            let got = net.predict(&p, &xs).unwrap();
            assert!((got - cnn_gru_reference(&p, &xs)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_conv_depends_on_biases_only() {
        let net = Net::cnn_gru(2, 3, 3, Activation::Tanh, &[2]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = net.init(&mut rng);
        // zero the kernels but keep the conv biases
        for v in &mut p[..3 * 3 * 2] {
            *v = 0.0;
        }
        let a = net.predict(&p, &rand_seq(&mut rng, 5, 2)).unwrap();
        let b = net.predict(&p, &rand_seq(&mut rng, 5, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_errors() {
        let net = Net::cnn_gru(2, 3, 3, Activation::Tanh, &[2]);
        let p = vec![0.0; net.param_count()];
        let xs = rand_seq(&mut ChaCha8Rng::seed_from_u64(0), 2, 2);
        assert!(matches!(
            net.predict(&p, &xs),
            Err(Error::SequenceTooShort { len: 2, kernel: 3 })
        ));
        let xs = rand_seq(&mut ChaCha8Rng::seed_from_u64(0), 4, 3);
        assert!(matches!(
            net.predict(&p, &xs),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gru_state_stays_bounded() {
        let g = GruShape {
            input: 2,
            hidden: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let p: Vec<f64> = (0..g.param_count())
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let mut j: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let bound = j.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for _ in 0..10 {
                let y: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
                j = g.cell(&p, &j, &y);
                assert!(j.iter().all(|v| v.abs() <= bound + 1e-15));
            }
        }
    }
}
