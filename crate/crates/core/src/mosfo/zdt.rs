//! ZDT1–3 two-objective benchmarks on the unit box.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::archive::dominates_unchecked;
use super::problem::{Bounds, MultiObjectiveProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZdtKind {
    Zdt1,
    Zdt2,
    Zdt3,
}

impl FromStr for ZdtKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zdt1" => Ok(Self::Zdt1),
            "zdt2" => Ok(Self::Zdt2),
            "zdt3" => Ok(Self::Zdt3),
            other => Err(Error::UnknownProblem(other.to_string())),
        }
    }
}

impl fmt::Display for ZdtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zdt1 => "zdt1",
            Self::Zdt2 => "zdt2",
            Self::Zdt3 => "zdt3",
        })
    }
}

impl ZdtKind {
    fn shape(self, p1: f64, g: f64) -> f64 {
        let ratio = p1 / g;
        match self {
            Self::Zdt1 => 1.0 - ratio.sqrt(),
            Self::Zdt2 => 1.0 - ratio * ratio,
            Self::Zdt3 => 1.0 - ratio.sqrt() - ratio * (10.0 * PI * p1).sin(),
        }
    }

    /// `f2` on the optimal surface (`g = 1`) as a function of `f1`.
    pub fn front_curve(self, f1: f64) -> f64 {
        self.shape(f1, 1.0)
    }
}

/// Objectives `(p1, p2)` of a point in `[0, 1]^m`.
pub fn zdt_evaluate(kind: ZdtKind, v: &[f64]) -> Result<[f64; 2]> {
    if v.len() < 2 || v.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::OutOfDomain(v.to_vec()));
    }
    Ok(evaluate_unchecked(kind, v))
}

fn evaluate_unchecked(kind: ZdtKind, v: &[f64]) -> [f64; 2] {
    let m = v.len();
    let g = 1.0 + 9.0 / (m - 1) as f64 * v[1..].iter().sum::<f64>();
    let p1 = v[0];
    [p1, g * kind.shape(p1, g)]
}

/// A ZDT function as an optimisation problem.
#[derive(Debug, Clone)]
pub struct Zdt {
    kind: ZdtKind,
    bounds: Bounds,
}

impl Zdt {
    pub fn new(kind: ZdtKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(
                "ZDT needs at least two variables".into(),
            ));
        }
        Ok(Self {
            kind,
            bounds: Bounds::uniform(dim, 0.0, 1.0)?,
        })
    }

    pub fn kind(&self) -> ZdtKind {
        self.kind
    }
}

impl MultiObjectiveProblem for Zdt {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn objective_count(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        evaluate_unchecked(self.kind, x).to_vec()
    }
}

/// `n` reference points spread uniformly in `f1` over the analytic front.
///
/// ZDT3's front is the non-dominated part of its curve, five disconnected
/// pieces; it is recovered from a dense grid before subsampling.
pub fn analytic_front(kind: ZdtKind, n: usize) -> Vec<[f64; 2]> {
    match kind {
        ZdtKind::Zdt1 | ZdtKind::Zdt2 => (0..n)
            .map(|i| {
                let f1 = i as f64 / (n - 1).max(1) as f64;
                [f1, kind.front_curve(f1)]
            })
            .collect(),
        ZdtKind::Zdt3 => {
            let dense = nondominated_curve(kind, 200_000);
            (0..n)
                .map(|i| dense[i * (dense.len() - 1) / (n - 1).max(1)])
                .collect()
        }
    }
}

/// Non-dominated subset of the `g = 1` curve sampled at `grid` points.
fn nondominated_curve(kind: ZdtKind, grid: usize) -> Vec<[f64; 2]> {
    let pts: Vec<[f64; 2]> = (0..grid)
        .map(|i| {
            let f1 = i as f64 / (grid - 1) as f64;
            [f1, kind.front_curve(f1)]
        })
        .collect();
    // sweeping by increasing f1, a point survives iff it beats every earlier f2
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for p in pts {
        if p[1] < best {
            best = p[1];
            out.push(p);
        }
    }
    debug_assert!(out.windows(2).all(|w| !dominates_unchecked(&w[0], &w[1])));
    out
}

/// `f1` intervals of ZDT3's disconnected front, recovered numerically.
pub fn zdt3_segments() -> Vec<(f64, f64)> {
    let grid = 200_000;
    let step = 1.0 / (grid - 1) as f64;
    let pts = nondominated_curve(ZdtKind::Zdt3, grid);
    let mut segs: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        match segs.last_mut() {
            Some(s) if p[0] - s.1 <= 1.5 * step => s.1 = p[0],
            _ => segs.push((p[0], p[0])),
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        let z = zdt_evaluate(ZdtKind::Zdt1, &[0.25, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(z, [0.25, 0.5]);
        let z = zdt_evaluate(ZdtKind::Zdt2, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(z, [0.5, 0.75]);
        let z = zdt_evaluate(ZdtKind::Zdt3, &[0.0; 4]).unwrap();
        assert_eq!(z, [0.0, 1.0]);
    }

    #[test]
    fn g_term() {
        // m = 4: g = 1 + 3 * (0.1 + 0.2 + 0.3) = 2.8
        let z = zdt_evaluate(ZdtKind::Zdt2, &[0.7, 0.1, 0.2, 0.3]).unwrap();
        let g = 2.8;
        assert!((z[1] - g * (1.0 - (0.7 / g) * (0.7 / g))).abs() < 1e-12);
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(
            zdt_evaluate(ZdtKind::Zdt1, &[1.2, 0.0]),
            Err(Error::OutOfDomain(_))
        ));
        assert!(matches!(
            "zdt9".parse::<ZdtKind>(),
            Err(Error::UnknownProblem(_))
        ));
        assert_eq!("ZDT3".parse::<ZdtKind>().unwrap(), ZdtKind::Zdt3);
    }

    #[test]
    fn zdt3_has_five_segments() {
        let segs = zdt3_segments();
        assert_eq!(segs.len(), 5);
        // published segment bounds, to grid resolution
        let known = [
            (0.0, 0.0830015349),
            (0.1822287280, 0.2577623634),
            (0.4093136748, 0.4538821041),
            (0.6183967944, 0.6525117038),
            (0.8233317983, 0.8518328654),
        ];
        for ((a, b), (c, d)) in segs.iter().zip(known) {
            assert!(
                (a - c).abs() < 1e-4 && (b - d).abs() < 1e-4,
                "{a} {b} vs {c} {d}"
            );
        }
    }

    #[test]
    fn reference_fronts() {
        let f = analytic_front(ZdtKind::Zdt1, 500);
        assert_eq!(f.len(), 500);
        assert_eq!(f[0], [0.0, 1.0]);
        assert_eq!(f[499], [1.0, 0.0]);
        let f = analytic_front(ZdtKind::Zdt3, 500);
        assert_eq!(f.len(), 500);
        let segs = zdt3_segments();
        assert!(f
            .iter()
            .all(|p| segs.iter().any(|s| p[0] >= s.0 && p[0] <= s.1)));
    }
}
