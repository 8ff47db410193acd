use rayon::prelude::*;

use super::config::RunConfig;
use super::synth;
use crate::ensemble::{
    self, fit_intervals, fit_weights, ForecastBundle, IntervalModel, PredictionPanel, WeightFit,
    WeightVector,
};
use crate::error::{Error, Result};
use crate::ficmg::{FeatureRecord, FicmgModel};
use crate::granulation::{granulate_series, GranuleSeries};
use crate::learners::{self, make_supervised, LearnerKind, LearnerModel, SupervisedSet};
use crate::timeseries::{interpolate_gaps, load_series, partition_windows, RawSeries, Series};

/// The configured data file, or the synthetic series when none is set.
pub fn load_input(cfg: &RunConfig) -> Result<RawSeries> {
    match &cfg.data_path {
        Some(p) => load_series(p).map_err(|e| e.in_stage("load")),
        None => synth::generate(&cfg.synth, cfg.seed).map_err(|e| e.in_stage("synth")),
    }
}

/// Granules, clustering and feature records for one series.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub series: Series,
    pub granules: GranuleSeries,
    pub ficmg: FicmgModel,
    pub records: Vec<FeatureRecord>,
    /// End granule indices of the train and validation parts.
    pub boundaries: (usize, usize),
}

/// Imputes, granulates and extracts features. The clustering sees only the
/// training granules.
pub fn prepare(cfg: &RunConfig, raw: &RawSeries) -> Result<Prepared> {
    let series = interpolate_gaps(raw).map_err(|e| e.in_stage("impute"))?;
    let windows =
        partition_windows(&series, cfg.window_size).map_err(|e| e.in_stage("granulate"))?;
    let granules = granulate_series(&series, &windows).map_err(|e| e.in_stage("granulate"))?;
    let n = granules.len();
    let need = 3 * (cfg.lag + 1);
    if n < need {
        return Err(Error::TooFewGranules {
            needed: need,
            got: n,
        }
        .in_stage("granulate"));
    }
    let boundaries = cfg.split.boundaries(n);
    let ficmg = FicmgModel::fit(&granules.points()[..boundaries.0], &cfg.ficmg, false)
        .map_err(|e| e.in_stage("features"))?;
    let records = ficmg.transform(&granules);
    Ok(Prepared {
        series,
        granules,
        ficmg,
        records,
        boundaries,
    })
}

/// Supervised samples built inside `range` of the records only; target
/// positions refer to the full record list.
pub fn supervised_in(
    records: &[FeatureRecord],
    range: std::ops::Range<usize>,
    lag: usize,
) -> Result<SupervisedSet> {
    let offset = range.start;
    let mut set = make_supervised(&records[range], lag)?;
    set.target_positions.iter_mut().for_each(|p| *p += offset);
    Ok(set)
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: SupervisedSet,
    pub val: SupervisedSet,
    pub test: SupervisedSet,
}

pub fn splits(prep: &Prepared, lag: usize) -> Result<Splits> {
    let (a, b) = prep.boundaries;
    let n = prep.records.len();
    let wrap = |e: Error| e.in_stage("supervised");
    Ok(Splits {
        train: supervised_in(&prep.records, 0..a, lag).map_err(wrap)?,
        val: supervised_in(&prep.records, a..b, lag).map_err(wrap)?,
        test: supervised_in(&prep.records, b..n, lag).map_err(wrap)?,
    })
}

/// Fits each learner in parallel; results keep the order of `kinds`.
pub fn train_learners(
    cfg: &RunConfig,
    kinds: &[LearnerKind],
    data: &SupervisedSet,
) -> Result<Vec<LearnerModel>> {
    kinds
        .par_iter()
        .map(|&k| learners::fit(k, data, &cfg.learner_config(k)?))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("train"))
}

pub fn prediction_panel(models: &[LearnerModel], data: &SupervisedSet) -> Result<PredictionPanel> {
    let preds = models
        .iter()
        .map(|m| m.predict(&data.inputs))
        .collect::<Result<Vec<_>>>()?;
    PredictionPanel::new(preds, data.targets.clone())
}

#[derive(Debug, Clone)]
pub struct ForecastRun {
    pub kinds: Vec<LearnerKind>,
    pub models: Vec<LearnerModel>,
    /// `None` for a single-learner run.
    pub weight_fit: Option<WeightFit>,
    pub weights: WeightVector,
    pub intervals: IntervalModel,
    pub val_panel: PredictionPanel,
    pub test_panel: PredictionPanel,
    pub bundle: ForecastBundle,
}

impl ForecastRun {
    pub fn test_actuals(&self) -> &[f64] {
        self.test_panel.actuals()
    }

    pub fn learner_names(&self) -> Vec<&'static str> {
        self.kinds.iter().map(|k| k.cli_name()).collect()
    }
}

/// Trains on the train split, fits weights and interval offsets on the
/// validation split and forecasts the test split.
///
/// With `solo` set only that learner is trained and its weight is fixed at 1.
pub fn run_forecast(
    cfg: &RunConfig,
    prep: &Prepared,
    solo: Option<LearnerKind>,
) -> Result<ForecastRun> {
    let sp = splits(prep, cfg.lag)?;
    let kinds: Vec<LearnerKind> = match solo {
        Some(k) => vec![k],
        None => LearnerKind::ALL.to_vec(),
    };
    let models = train_learners(cfg, &kinds, &sp.train)?;
    let val_panel = prediction_panel(&models, &sp.val).map_err(|e| e.in_stage("validate"))?;
    let (weight_fit, weights) = if solo.is_some() {
        (None, WeightVector(vec![1.0]))
    } else {
        let fit =
            fit_weights(&val_panel, &cfg.mosfo_config()).map_err(|e| e.in_stage("weights"))?;
        let w = fit.chosen.clone();
        (Some(fit), w)
    };
    let val_point = ensemble::combine(&val_panel, &weights.0)?;
    let residuals: Vec<f64> = val_panel
        .actuals()
        .iter()
        .zip(&val_point)
        .map(|(a, p)| a - p)
        .collect();
    let intervals = fit_intervals(&residuals, &cfg.levels).map_err(|e| e.in_stage("intervals"))?;
    let test_panel = prediction_panel(&models, &sp.test).map_err(|e| e.in_stage("forecast"))?;
    let bundle = ensemble::forecast(&test_panel, &weights, &intervals)
        .map_err(|e| e.in_stage("forecast"))?;
    Ok(ForecastRun {
        kinds,
        models,
        weight_fit,
        weights,
        intervals,
        val_panel,
        test_panel,
        bundle,
    })
}
