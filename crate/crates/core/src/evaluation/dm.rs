//! Diebold–Mariano test for equal predictive accuracy.
//!
//! The loss differential is squared-error: `d_i = e_a,i² − e_b,i²`. The
//! statistic is the studentised mean `d̄ / sqrt(s²_d / n)` with `s²_d` the
//! sample variance of `d`. Negative values favour model `a`.

use crate::error::{Error, Result};

/// Two-sided 5% critical value of the standard normal.
pub const Z_CRITICAL: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmResult {
    pub statistic: f64,
    /// `|statistic| > Z_CRITICAL`.
    pub reject: bool,
}

pub fn dm_test(errors_a: &[f64], errors_b: &[f64]) -> Result<DmResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::LengthMismatch(errors_a.len(), errors_b.len()));
    }
    let n = errors_a.len();
    if n < 10 {
        return Err(Error::TooShort { needed: 10, got: n });
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let statistic = if var == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(mean)
        }
    } else {
        mean / (var / n as f64).sqrt()
    };
    Ok(DmResult {
        statistic,
        reject: statistic.abs() > Z_CRITICAL,
    })
}
