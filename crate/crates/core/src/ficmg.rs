//! Fuzzy-rough C-means over granule triples.
//!
//! Each granule is a point in `(low, r, up)` space. One sweep of the
//! clustering loop computes fuzzy memberships, sorts every point into the
//! upper approximation, the lower approximation or the boundary of each
//! center, and moves each center to a `w`-weighted blend of its upper- and
//! lower-region means. Converged centers then yield one feature record per
//! granule: the membership column followed by the raw triple.
//!
//! The thresholds are read relative to the nearest-center distance `δ`:
//! `χ₁ = (1 + r1)·δ`, `χ₂ = (1 + r2)·δ`. This keeps every point in the upper
//! approximation of its nearest center.

use std::io::Write;

use crate::error::{Error, Result};
use crate::granulation::GranuleSeries;

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FicmgConfig {
    /// Upper-approximation threshold ratio.
    pub r1: f64,
    /// Lower-approximation threshold ratio.
    pub r2: f64,
    /// Weight of the lower-approximation mean in the center update.
    pub w: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub cluster_count: usize,
}

impl Default for FicmgConfig {
    fn default() -> Self {
        Self {
            r1: 0.3,
            r2: 0.7,
            w: 0.5,
            max_iters: 100,
            tol: 1e-6,
            cluster_count: 3,
        }
    }
}

impl FicmgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r1 && self.r1 < self.r2) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < r1 < r2, got r1={} r2={}",
                self.r1, self.r2
            )));
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::InvalidConfig(format!(
                "w must lie in [0,1], got {}",
                self.w
            )));
        }
        if self.max_iters == 0 || self.cluster_count == 0 {
            return Err(Error::InvalidConfig(
                "max_iters and cluster_count must be positive".into(),
            ));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Cluster centers, one row per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Centers {
    pub rows: Vec<Point>,
}

impl Centers {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn distances(&self, p: &Point) -> Vec<f64> {
        self.rows.iter().map(|c| distance(p, c)).collect()
    }

    fn max_displacement(&self, other: &Centers) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Upper/lower approximation flags of one point against every center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointRegions {
    pub upper: Vec<bool>,
    pub lower: Vec<bool>,
}

/// Region flags for a whole point set, indexed `[cluster][point]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionFlags {
    pub upper: Vec<Vec<bool>>,
    pub lower: Vec<Vec<bool>>,
}

impl RegionFlags {
    pub fn from_points(per_point: &[PointRegions], m: usize) -> Self {
        let mut upper = vec![vec![false; per_point.len()]; m];
        let mut lower = vec![vec![false; per_point.len()]; m];
        for (i, pr) in per_point.iter().enumerate() {
            for j in 0..m {
                upper[j][i] = pr.upper[j];
                lower[j][i] = pr.lower[j];
            }
        }
        Self { upper, lower }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub window_index: usize,
    /// Memberships under the converged centers, then `low, r, up`.
    pub features: Vec<f64>,
    pub nearest_cluster: usize,
}

impl FeatureRecord {
    /// The `r` component of the source granule.
    pub fn granule_r(&self) -> f64 {
        self.features[self.features.len() - 2]
    }
}

/// State of one completed sweep, recorded when tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub centers: Centers,
    /// Largest deviation of a membership column sum from 1 during the sweep.
    pub membership_sum_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FicmgModel {
    pub centers: Centers,
    pub iterations: usize,
    /// `false` when the loop stopped at `max_iters`; the last iterate is kept.
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

fn distance(a: &Point, b: &Point) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Initial centers spanning the point cloud.
///
/// With three clusters the rows are the per-component minimum, mean and
/// maximum. Other counts use evenly spaced per-component quantiles (a single
/// cluster starts at the mean).
pub fn init_centers(points: &[Point], cluster_count: usize) -> Result<Centers> {
    if points.len() < cluster_count || cluster_count == 0 {
        return Err(Error::TooFewGranules {
            needed: cluster_count.max(1),
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean: Point = std::array::from_fn(|k| points.iter().map(|p| p[k]).sum::<f64>() / n);
    let rows = match cluster_count {
        1 => vec![mean],
        3 => {
            let min =
                std::array::from_fn(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min));
            let max = std::array::from_fn(|k| {
                points
                    .iter()
                    .map(|p| p[k])
                    .fold(f64::NEG_INFINITY, f64::max)
            });
            vec![min, mean, max]
        }
        m => {
            let sorted: [Vec<f64>; 3] = std::array::from_fn(|k| {
                let mut v: Vec<f64> = points.iter().map(|p| p[k]).collect();
                v.sort_by(f64::total_cmp);
                v
            });
            (0..m)
                .map(|j| {
                    let q = j as f64 / (m - 1) as f64;
                    std::array::from_fn(|k| quantile_sorted(&sorted[k], q))
                })
                .collect()
        }
    };
    Ok(Centers { rows })
}

/// Fuzzy membership of one point in every cluster (fuzzifier 2).
///
/// A point that coincides with a center belongs fully to the first such
/// center.
pub fn compute_membership(point: &Point, centers: &Centers) -> Vec<f64> {
    membership_from_distances(&centers.distances(point))
}

pub fn membership_from_distances(d: &[f64]) -> Vec<f64> {
    if let Some(hit) = d.iter().position(|&x| x == 0.0) {
        let mut u = vec![0.0; d.len()];
        u[hit] = 1.0;
        return u;
    }
    d.iter()
        .map(|&dj| {
            let s: f64 = d.iter().map(|&dp| (dj / dp) * (dj / dp)).sum();
            1.0 / s
        })
        .collect()
}

/// Three-way rough classification of one point against every center.
pub fn classify_regions(distances: &[f64], cfg: &FicmgConfig) -> PointRegions {
    let m = distances.len();
    let mut upper = vec![false; m];
    let mut lower = vec![false; m];
    let (nearest, delta) =
        distances
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (j, d)| if d < best.1 { (j, d) } else { best },
            );
    if delta == 0.0 {
        upper[nearest] = true;
        return PointRegions { upper, lower };
    }
    let chi1 = (1.0 + cfg.r1) * delta;
    let chi2 = (1.0 + cfg.r2) * delta;
    for (j, &d) in distances.iter().enumerate() {
        if d <= chi1 {
            upper[j] = true;
        } else if d <= chi2 {
            lower[j] = true;
        }
    }
    PointRegions { upper, lower }
}

/// Region-weighted center update. Empty regions blend with the previous center.
pub fn update_centers(
    points: &[Point],
    flags: &RegionFlags,
    previous: &Centers,
    cfg: &FicmgConfig,
) -> Centers {
    let w = cfg.w;
    let rows = previous
        .rows
        .iter()
        .enumerate()
        .map(|(j, prev)| {
            let mut su = [0.0; 3];
            let mut sl = [0.0; 3];
            let (mut nu, mut nl) = (0usize, 0usize);
            for (i, p) in points.iter().enumerate() {
                if flags.upper[j][i] {
                    nu += 1;
                    su.iter_mut().zip(p).for_each(|(s, x)| *s += x);
                }
                if flags.lower[j][i] {
                    nl += 1;
                    sl.iter_mut().zip(p).for_each(|(s, x)| *s += x);
                }
            }
            match (nu, nl) {
                (0, 0) => *prev,
                (0, _) => std::array::from_fn(|k| w * sl[k] / nl as f64 + (1.0 - w) * prev[k]),
                (_, 0) => std::array::from_fn(|k| (1.0 - w) * su[k] / nu as f64 + w * prev[k]),
                _ => std::array::from_fn(|k| (1.0 - w) * su[k] / nu as f64 + w * sl[k] / nl as f64),
            }
        })
        .collect();
    Centers { rows }
}

impl FicmgModel {
    /// Runs the clustering loop from [`init_centers`] until the largest
    /// component-wise center move drops below `tol` or `max_iters` sweeps.
    pub fn fit(points: &[Point], cfg: &FicmgConfig, keep_trace: bool) -> Result<Self> {
        cfg.validate()?;
        let mut centers = init_centers(points, cfg.cluster_count)?;
        let mut trace = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iters {
            iterations += 1;
            let mut sum_err: f64 = 0.0;
            let regions: Vec<PointRegions> = points
                .iter()
                .map(|p| {
                    let d = centers.distances(p);
                    let u = membership_from_distances(&d);
                    sum_err = sum_err.max((u.iter().sum::<f64>() - 1.0).abs());
                    classify_regions(&d, cfg)
                })
                .collect();
            let flags = RegionFlags::from_points(&regions, cfg.cluster_count);
            let next = update_centers(points, &flags, &centers, cfg);
            let moved = next.max_displacement(&centers);
            centers = next;
            if keep_trace {
                trace.push(IterationRecord {
                    centers: centers.clone(),
                    membership_sum_error: sum_err,
                });
            }
            if moved < cfg.tol {
                converged = true;
                break;
            }
        }
        Ok(Self {
            centers,
            iterations,
            converged,
            trace,
        })
    }

    /// Feature records for `granules` under this model's centers.
    pub fn transform(&self, granules: &GranuleSeries) -> Vec<FeatureRecord> {
        granules
            .granules
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let u = compute_membership(&g.as_array(), &self.centers);
                let nearest_cluster =
                    u.iter()
                        .enumerate()
                        .fold(0, |best, (j, &v)| if v > u[best] { j } else { best });
                let mut features = u;
                features.extend_from_slice(&g.as_array());
                FeatureRecord {
                    window_index: i,
                    features,
                    nearest_cluster,
                }
            })
            .collect()
    }

    /// Writes `iteration,cluster,c_low,c_r,c_up,membership_sum_error` rows.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,cluster,c_low,c_r,c_up,membership_sum_error")?;
        for (it, rec) in self.trace.iter().enumerate() {
            for (j, c) in rec.centers.rows.iter().enumerate() {
                writeln!(
                    out,
                    "{},{j},{},{},{},{}",
                    it + 1,
                    c[0],
                    c[1],
                    c[2],
                    rec.membership_sum_error
                )?;
            }
        }
        Ok(())
    }
}

/// Fits the clustering on `granules` and emits their feature records.
pub fn extract_features(
    granules: &GranuleSeries,
    cfg: &FicmgConfig,
) -> Result<(Vec<FeatureRecord>, FicmgModel)> {
    let model = FicmgModel::fit(&granules.points(), cfg, false)?;
    Ok((model.transform(granules), model))
}

/// Writes `window_index,u1..um,low,r,up,nearest_cluster` rows.
pub fn write_features_csv<W: Write>(records: &[FeatureRecord], mut out: W) -> std::io::Result<()> {
    let m = records.first().map_or(3, |r| r.features.len() - 3);
    let us: Vec<String> = (1..=m).map(|j| format!("u{j}")).collect();
    writeln!(
        out,
        "window_index,{},low,r,up,nearest_cluster",
        us.join(",")
    )?;
    for rec in records {
        let vals: Vec<String> = rec.features.iter().map(|v| v.to_string()).collect();
        writeln!(
            out,
            "{},{},{}",
            rec.window_index,
            vals.join(","),
            rec.nearest_cluster
        )?;
    }
    Ok(())
}
