//! Triangular fuzzy information granules.
//!
//! Every window of the series collapses to a triple `(low, r, up)`: the
//! minimum, arithmetic mean and maximum of the window. The triple parameterises
//! a triangular membership function that peaks at `r`.

use std::io::Write;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::timeseries::{Series, WindowSet};

/// Triangular fuzzy granule with `low <= r <= up`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Granule {
    pub low: f64,
    pub r: f64,
    pub up: f64,
}

impl Granule {
    pub fn new(low: f64, r: f64, up: f64) -> Result<Self> {
        if !(low <= r && r <= up) {
            return Err(Error::InvalidConfig(format!(
                "granule parameters must satisfy low <= r <= up, got ({low}, {r}, {up})"
            )));
        }
        Ok(Self { low, r, up })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.low, self.r, self.up]
    }

    /// Degree to which `t` belongs to this granule.
    ///
    /// Collapsed edges (`r == low` or `up == r`) evaluate to 1 on the
    /// collapsed segment so the function stays total.
    pub fn membership(&self, t: f64) -> f64 {
        if t < self.low || t > self.up {
            0.0
        } else if t <= self.r {
            if self.r == self.low {
                1.0
            } else {
                (t - self.low) / (self.r - self.low)
            }
        } else if self.up == self.r {
            1.0
        } else {
            (self.up - t) / (self.up - self.r)
        }
    }
}

/// One granule per window, in window order.
#[derive(Debug, Clone, PartialEq)]
pub struct GranuleSeries {
    pub granules: Vec<Granule>,
    pub window_size: usize,
    /// Index range of the source series covered by the windows.
    pub span: Range<usize>,
}

impl GranuleSeries {
    pub fn len(&self) -> usize {
        self.granules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.granules.is_empty()
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        self.granules.iter().map(Granule::as_array).collect()
    }

    /// Writes `window_index,low,r,up` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "window_index,low,r,up")?;
        for (i, g) in self.granules.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", g.low, g.r, g.up)?;
        }
        Ok(())
    }
}

/// Minimum, mean and maximum of a window.
pub fn granulate_window(values: &[f64]) -> Result<Granule> {
    if values.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let low = values.iter().copied().fold(f64::INFINITY, f64::min);
    let up = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // rounding can push the mean a hair outside [min, max] on constant windows
    let r = (values.iter().sum::<f64>() / values.len() as f64).clamp(low, up);
    Ok(Granule { low, r, up })
}

pub fn granulate_series(series: &Series, windows: &WindowSet) -> Result<GranuleSeries> {
    let granules = windows
        .windows
        .iter()
        .map(|w| granulate_window(&series.values[w.clone()]))
        .collect::<Result<Vec<_>>>()?;
    let span = match (windows.windows.first(), windows.windows.last()) {
        (Some(a), Some(b)) => a.start..b.end,
        _ => 0..0,
    };
    Ok(GranuleSeries {
        granules,
        window_size: windows.window_size,
        span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::partition_windows;
    use proptest::prelude::*;

    #[test]
    fn window_examples() {
        assert_eq!(
            granulate_window(&[2.0, 4.0, 6.0]).unwrap(),
            Granule {
                low: 2.0,
                r: 4.0,
                up: 6.0
            }
        );
        assert_eq!(
            granulate_window(&[5.0; 3]).unwrap(),
            Granule {
                low: 5.0,
                r: 5.0,
                up: 5.0
            }
        );
        assert!(matches!(granulate_window(&[]), Err(Error::EmptyWindow)));
    }

    #[test]
    fn sampled_sinusoid_window() {
        let w: Vec<f64> = (0..36)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / 36.0).sin() + 5.0)
            .collect();
        // oracle: sin hits exactly +-1 at i = 9 and 27, and a full period sums to zero
        let g = granulate_window(&w).unwrap();
        assert!((g.low - 4.0).abs() < 1e-12);
        assert!((g.up - 6.0).abs() < 1e-12);
        assert!((g.r - 5.0).abs() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let g = Granule::new(2.0, 4.0, 6.0).unwrap();
        assert_eq!(g.membership(4.0), 1.0);
        assert_eq!(g.membership(3.0), 0.5);
        assert_eq!(g.membership(7.0), 0.0);
        assert_eq!(g.membership(5.0), 0.5);
        let flat = Granule::new(5.0, 5.0, 5.0).unwrap();
        assert_eq!(flat.membership(5.0), 1.0);
        assert_eq!(flat.membership(5.1), 0.0);
        let left_flat = Granule::new(1.0, 1.0, 3.0).unwrap();
        assert_eq!(left_flat.membership(1.0), 1.0);
        assert_eq!(left_flat.membership(2.0), 0.5);
    }

    #[test]
    fn series_examples() {
        let s = Series::from_values(vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0]);
        let w = partition_windows(&s, 3).unwrap();
        let gs = granulate_series(&s, &w).unwrap();
        assert_eq!(gs.points(), vec![[1.0, 2.0, 3.0], [4.0, 6.0, 8.0]]);
        assert_eq!(gs.span, 0..6);

        let empty = WindowSet {
            window_size: 3,
            windows: vec![],
        };
        assert!(granulate_series(&s, &empty).unwrap().is_empty());

        let s = Series::from_values([1.5, 2.5, 0.5].repeat(3));
        let gs = granulate_series(&s, &partition_windows(&s, 3).unwrap()).unwrap();
        assert!(gs.granules.iter().all(|g| *g == gs.granules[0]));
    }

    #[test]
    fn csv_layout() {
        let gs = GranuleSeries {
            granules: vec![Granule::new(1.0, 2.0, 3.5).unwrap()],
            window_size: 3,
            span: 0..3,
        };
        let mut buf = Vec::new();
        gs.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "window_index,low,r,up\n0,1,2,3.5\n"
        );
    }

    proptest! {
        #[test]
        fn granules_are_ordered(w in proptest::collection::vec(-50.0f64..50.0, 1..80)) {
            let g = granulate_window(&w).unwrap();
            prop_assert!(g.low <= g.r && g.r <= g.up);
        }

        #[test]
        fn translation_shifts_granule(w in proptest::collection::vec(0.0f64..30.0, 1..50), c in -10.0f64..10.0) {
            let g = granulate_window(&w).unwrap();
            let shifted: Vec<f64> = w.iter().map(|v| v + c).collect();
            let h = granulate_window(&shifted).unwrap();
            prop_assert!((h.low - g.low - c).abs() < 1e-9);
            prop_assert!((h.r - g.r - c).abs() < 1e-9);
            prop_assert!((h.up - g.up - c).abs() < 1e-9);
        }

        #[test]
        fn membership_normalised_and_piecewise_linear(
            low in -10.0f64..10.0, a in 0.01f64..5.0, b in 0.01f64..5.0,
            s in 0.0f64..1.0, t in 0.0f64..1.0, out in 0.001f64..10.0,
        ) {
            let g = Granule::new(low, low + a, low + a + b).unwrap();
            prop_assert_eq!(g.membership(g.r), 1.0);
            prop_assert_eq!(g.membership(g.low - out), 0.0);
            prop_assert_eq!(g.membership(g.up + out), 0.0);
            let (t1, t2) = (g.low + s * a, g.low + t * a);
            let mid = g.membership(0.5 * (t1 + t2));
            prop_assert!((mid - 0.5 * (g.membership(t1) + g.membership(t2))).abs() < 1e-9);
            let (t1, t2) = (g.r + s * b, g.r + t * b);
            let mid = g.membership(0.5 * (t1 + t2));
            prop_assert!((mid - 0.5 * (g.membership(t1) + g.membership(t2))).abs() < 1e-9);
        }
    }
}
