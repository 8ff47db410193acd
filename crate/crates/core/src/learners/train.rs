use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::Seq;
use super::nets::Net;

/// Per-column z-score transform; zero-spread columns pass through centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let width = rows.first().map_or(0, Vec::len);
        let mean: Vec<f64> = (0..width)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let scale = (0..width)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn fit_scalar(values: &[f64]) -> Self {
        let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v]).collect();
        Self::fit(&rows)
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.scale[j])
            .collect()
    }

    pub fn forward1(&self, v: f64) -> f64 {
        (v - self.mean[0]) / self.scale[0]
    }

    pub fn inverse1(&self, v: f64) -> f64 {
        v * self.scale[0] + self.mean[0]
    }
}

/// Splits a flat lagged row into `lag` vectors of `row.len() / lag` values.
pub(crate) fn to_sequence(row: &[f64], lag: usize) -> Seq {
    let width = row.len() / lag;
    row.chunks(width).map(<[f64]>::to_vec).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
}

/// Adam on mini-batch mean squared error with global-norm clipping.
pub fn train_net<R: Rng + ?Sized>(
    net: &Net,
    xs: &[Seq],
    ys: &[f64],
    tp: &TrainParams,
    rng: &mut R,
) -> Vec<f64> {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut p = net.init(rng);
    let mut m = vec![0.0; p.len()];
    let mut v = vec![0.0; p.len()];
    let mut order: Vec<usize> = (0..ys.len()).collect();
    let mut step = 0i32;
    for _ in 0..tp.epochs {
        order.shuffle(rng);
        for batch in order.chunks(tp.batch_size.max(1)) {
            let mut grad = vec![0.0; p.len()];
            let n = batch.len() as f64;
            for &i in batch {
                let (pred, trace) = net.forward(&p, &xs[i]);
                net.backward(&p, &trace, 2.0 * (pred - ys[i]) / n, &mut grad);
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > tp.clip_norm {
                let k = tp.clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= k);
            }
            step += 1;
            let c1 = 1.0 - b1.powi(step);
            let c2 = 1.0 - b2.powi(step);
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
                v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
                p[k] -= tp.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaler_round_trip() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Scaler::fit(&rows);
        assert_eq!(s.apply(&rows[0]), vec![-1.0, 0.0]);
        let t = Scaler::fit_scalar(&[2.0, 4.0, 6.0]);
        assert!((t.inverse1(t.forward1(5.5)) - 5.5).abs() < 1e-15);
    }

    #[test]
    fn sequence_reshape() {
        let s = to_sequence(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3);
        assert_eq!(s, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    }
}
