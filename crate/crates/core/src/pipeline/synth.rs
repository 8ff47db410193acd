//! Seeded synthetic wind-speed series for demos and tests.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::timeseries::RawSeries;

/// First timestamp of generated series, epoch seconds.
pub const SYNTH_ORIGIN: i64 = 1_700_000_000;
pub const SYNTH_STEP: i64 = 600;
const FLOOR: f64 = 0.2;

/// Daily sinusoid plus AR(1) noise, floored at a small positive speed, with
/// short runs of missing samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub length: usize,
    pub mean: f64,
    pub amplitude: f64,
    /// Samples per cycle; 144 is one day at a 10-minute cadence.
    pub period: f64,
    pub ar_phi: f64,
    pub noise_sd: f64,
    /// Chance that a gap run starts at any interior sample.
    pub gap_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            length: 28_800,
            mean: 8.0,
            amplitude: 2.5,
            period: 144.0,
            ar_phi: 0.9,
            noise_sd: 0.3,
            gap_rate: 0.002,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidConfig(
                "synth.length must be at least 2".into(),
            ));
        }
        if !(self.period > 0.0) || !(self.noise_sd >= 0.0) || !(self.ar_phi.abs() < 1.0) {
            return Err(Error::InvalidConfig(
                "synth needs period > 0, noise_sd >= 0 and |ar_phi| < 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.gap_rate) {
            return Err(Error::InvalidConfig(
                "synth.gap_rate must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<RawSeries> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let tau = std::f64::consts::TAU;
    let mut ar = 0.0;
    let mut values: Vec<Option<f64>> = (0..cfg.length)
        .map(|i| {
            ar = cfg.ar_phi * ar + noise.sample(&mut rng);
            let t = i as f64;
            let slow = 0.3 * cfg.amplitude * (tau * t / (cfg.period * 7.3)).sin();
            Some((cfg.mean + cfg.amplitude * (tau * t / cfg.period).sin() + slow + ar).max(FLOOR))
        })
        .collect();
    let n = values.len();
    let mut i = 1;
    while i + 1 < n {
        if rng.random::<f64>() < cfg.gap_rate {
            let run = rng.random_range(1..=6).min(n - 1 - i);
            values[i..i + run].iter_mut().for_each(|v| *v = None);
            i += run + 1;
        } else {
            i += 1;
        }
    }
    let timestamps = (0..n as i64)
        .map(|k| SYNTH_ORIGIN + k * SYNTH_STEP)
        .collect();
    RawSeries::new(timestamps, values)
}

/// Writes `timestamp,wind_speed` with blank fields for gaps.
pub fn write_series_csv<W: Write>(series: &RawSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "timestamp,wind_speed")?;
    for (t, v) in series.timestamps.iter().zip(&series.values) {
        match v {
            Some(v) => writeln!(out, "{t},{v}")?,
            None => writeln!(out, "{t},")?,
        }
    }
    Ok(())
}
