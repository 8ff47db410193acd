use crate::error::{Error, Result};

/// Distance within which an iterate counts as stuck on a fixed point.
const FIXED_POINT_EPS: f64 = 1e-12;
const ESCAPE_NUDGE: f64 = 1e-6;

/// Skew tent map on `[0, 1]` with breakpoint `apla`.
///
/// Iterates landing within `1e-12` of 0, 1 or the interior fixed point
/// `1 / (2 - apla)` are nudged by `1e-6` (wrapping back into the unit
/// interval) so the sequence never settles.
#[derive(Debug, Clone, PartialEq)]
pub struct TentMap {
    state: f64,
    apla: f64,
}

impl TentMap {
    pub fn new(seed: f64, apla: f64) -> Result<Self> {
        if !(seed > 0.0 && seed < 1.0) {
            return Err(Error::InvalidSeed(seed));
        }
        if !(apla > 0.0 && apla < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tent parameter must lie in (0,1), got {apla}"
            )));
        }
        Ok(Self { state: seed, apla })
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    fn escape(&self, x: f64) -> f64 {
        let fixed = 1.0 / (2.0 - self.apla);
        let stuck = [0.0, fixed, 1.0]
            .iter()
            .any(|p| (x - p).abs() <= FIXED_POINT_EPS);
        if !stuck {
            return x;
        }
        let y = x + ESCAPE_NUDGE;
        if y >= 1.0 {
            y - 1.0
        } else {
            y
        }
    }
}

impl Iterator for TentMap {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let x = self.state;
        let next = if x < self.apla {
            x / self.apla
        } else {
            (1.0 - x) / (1.0 - self.apla)
        };
        self.state = self.escape(next);
        Some(self.state)
    }
}

/// The first `length` iterates after `seed`.
pub fn tent_sequence(seed: f64, apla: f64, length: usize) -> Result<Vec<f64>> {
    Ok(TentMap::new(seed, apla)?.take(length).collect())
}
