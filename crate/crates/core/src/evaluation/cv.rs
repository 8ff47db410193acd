use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use super::metrics::{point_scores, PointScores};
use crate::ensemble::{combine, fit_weights};
use crate::error::{Error, Result};
use crate::ficmg::FicmgModel;
use crate::granulation::GranuleSeries;
use crate::learners::{make_supervised, LearnerKind};
use crate::pipeline::{prediction_panel, supervised_in, train_learners, RunConfig};

/// Share of each fold's training samples held back to fit the weights.
pub const CV_VALIDATION_SHARE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct CvFold {
    pub fold: usize,
    /// Granule indices held out.
    pub test: Range<usize>,
    /// Target positions scored in this fold.
    pub scored: Vec<usize>,
    pub scores: PointScores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<CvFold>,
}

impl CvReport {
    pub const HEADER: &'static str = "fold,MAPE,MSE,MAE,RMSE,NMSE,U1,IA,R2";

    pub fn mean(&self) -> [f64; 8] {
        let mut m = [0.0; 8];
        for f in &self.folds {
            for (a, v) in m.iter_mut().zip(f.scores.values()) {
                *a += v / self.folds.len() as f64;
            }
        }
        m
    }

    /// One row per fold then a `mean` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        let row = |v: [f64; 8]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        for f in &self.folds {
            writeln!(out, "{},{}", f.fold, row(f.scores.values()))?;
        }
        writeln!(out, "mean,{}", row(self.mean()))
    }
}

/// k-fold evaluation over contiguous granule blocks.
///
/// Per fold: the clustering is fit on the granules outside the block, the
/// training samples are those whose lag window and target avoid the block,
/// the last quarter of them fits the ensemble weights, and the block's own
/// samples are scored. Fold `i` uses seed `seed + i`.
pub fn run_cv(granules: &GranuleSeries, cfg: &RunConfig) -> Result<CvReport> {
    let n = granules.len();
    let folds = crate::timeseries::kfold_split(n, cfg.folds)?;
    let points = granules.points();
    let out = folds
        .into_par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let stage = |e: Error| e.in_stage("cv");
            let mut fcfg = cfg.clone();
            fcfg.seed = cfg.seed.wrapping_add(i as u64);
            let train_points: Vec<[f64; 3]> = fold.train.iter().map(|&j| points[j]).collect();
            let model = FicmgModel::fit(&train_points, &fcfg.ficmg, false).map_err(stage)?;
            let records = model.transform(granules);
            let all = make_supervised(&records, fcfg.lag).map_err(stage)?;
            let t = &fold.test;
            let keep: Vec<usize> = (0..all.len())
                .filter(|&s| {
                    let p = all.target_positions[s];
                    p < t.start || p - fcfg.lag >= t.end
                })
                .collect();
            let n_val = ((keep.len() as f64) * CV_VALIDATION_SHARE).ceil() as usize;
            if keep.len() < n_val + 2 || n_val == 0 {
                return Err(stage(Error::TooFewItems {
                    needed: 3,
                    got: keep.len(),
                }));
            }
            let fit_set = all.subset(&keep[..keep.len() - n_val]);
            let val_set = all.subset(&keep[keep.len() - n_val..]);
            let test_set = supervised_in(&records, t.clone(), fcfg.lag).map_err(stage)?;
            let models = train_learners(&fcfg, &LearnerKind::ALL, &fit_set)?;
            let val_panel = prediction_panel(&models, &val_set).map_err(stage)?;
            let weights = fit_weights(&val_panel, &fcfg.mosfo_config())
                .map_err(stage)?
                .chosen;
            let test_panel = prediction_panel(&models, &test_set).map_err(stage)?;
            let point = combine(&test_panel, &weights.0)?;
            Ok(CvFold {
                fold: i + 1,
                test: fold.test,
                scored: test_set.target_positions,
                scores: point_scores(test_panel.actuals(), &point).map_err(stage)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport { folds: out })
}
