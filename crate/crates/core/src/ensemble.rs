//! Weighted combination of learner forecasts and residual-quantile intervals.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::{mape, mse, quantile_sorted, MAPE_EPS};
use crate::mosfo::{optimize, Bounds, FnProblem, MosfoConfig, ParetoArchive};

/// Weight box half-width.
pub const WEIGHT_BOUND: f64 = 2.0;
pub const DEFAULT_LEVELS: [f64; 2] = [0.95, 0.85];
pub const MIN_RESIDUALS: usize = 20;

/// One weight per learner, each in `[-2, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter()
            .any(|v| !(-WEIGHT_BOUND..=WEIGHT_BOUND).contains(v))
        {
            return Err(Error::InvalidConfig(format!(
                "weights must lie in [-2, 2], got {w:?}"
            )));
        }
        Ok(Self(w))
    }

    pub fn unit(k: usize, i: usize) -> Self {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        Self(w)
    }
}

/// Per-learner predictions over a shared sample index, with the actuals.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPanel {
    predictions: Vec<Vec<f64>>,
    actuals: Vec<f64>,
}

impl PredictionPanel {
    /// `predictions[k][i]` is learner `k` on sample `i`.
    pub fn new(predictions: Vec<Vec<f64>>, actuals: Vec<f64>) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::TooFewItems { needed: 1, got: 0 });
        }
        if let Some(p) = predictions.iter().find(|p| p.len() != actuals.len()) {
            return Err(Error::LengthMismatch(p.len(), actuals.len()));
        }
        if predictions
            .iter()
            .flatten()
            .chain(&actuals)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig(
                "panel contains a non-finite value".into(),
            ));
        }
        Ok(Self {
            predictions,
            actuals,
        })
    }

    pub fn learners(&self) -> usize {
        self.predictions.len()
    }

    pub fn len(&self) -> usize {
        self.actuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actuals.is_empty()
    }

    pub fn actuals(&self) -> &[f64] {
        &self.actuals
    }

    pub fn predictions(&self) -> &[Vec<f64>] {
        &self.predictions
    }
}

pub fn combine(panel: &PredictionPanel, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != panel.learners() {
        return Err(Error::LengthMismatch(w.len(), panel.learners()));
    }
    Ok((0..panel.len())
        .map(|i| {
            w.iter()
                .zip(&panel.predictions)
                .map(|(wk, p)| wk * p[i])
                .sum()
        })
        .collect())
}

/// `(MAPE in percent, MSE)` of the combined forecast.
pub fn ensemble_objectives(w: &[f64], panel: &PredictionPanel) -> Result<[f64; 2]> {
    let c = combine(panel, w)?;
    Ok([mape(&panel.actuals, &c)?.0, mse(&panel.actuals, &c)?])
}

/// Index of the point nearest the ideal after per-objective min-max
/// normalisation; ties go to the lower first objective, then lower index.
pub fn select_compromise(objs: &[Vec<f64>]) -> Option<usize> {
    let first = objs.first()?;
    let k = first.len();
    let lo: Vec<f64> = (0..k)
        .map(|j| objs.iter().map(|o| o[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..k)
        .map(|j| objs.iter().map(|o| o[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let dist = |o: &[f64]| -> f64 {
        (0..k)
            .map(|j| {
                let span = hi[j] - lo[j];
                let v = if span > 0.0 {
                    (o[j] - lo[j]) / span
                } else {
                    0.0
                };
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };
    (0..objs.len()).min_by(|&a, &b| {
        dist(&objs[a])
            .total_cmp(&dist(&objs[b]))
            .then(objs[a][0].total_cmp(&objs[b][0]))
            .then(a.cmp(&b))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    pub archive: ParetoArchive,
    pub chosen: WeightVector,
    pub chosen_objectives: [f64; 2],
    /// Validation objectives of each single-learner weight vector.
    pub unit_objectives: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct ArchiveRow<'a> {
    weights: &'a [f64],
    mape: f64,
    mse: f64,
}

#[derive(Serialize)]
struct WeightReport<'a> {
    learners: &'a [&'a str],
    chosen_weights: &'a [f64],
    validation_mape: f64,
    validation_mse: f64,
    unit_objectives: &'a [[f64; 2]],
    archive: Vec<ArchiveRow<'a>>,
}

impl WeightFit {
    /// Pretty JSON with the chosen weights, their objectives and the archive.
    pub fn report_json(&self, learner_names: &[&str]) -> String {
        let report = WeightReport {
            learners: learner_names,
            chosen_weights: &self.chosen.0,
            validation_mape: self.chosen_objectives[0],
            validation_mse: self.chosen_objectives[1],
            unit_objectives: &self.unit_objectives,
            archive: self
                .archive
                .members()
                .iter()
                .map(|m| ArchiveRow {
                    weights: &m.position,
                    mape: m.objectives[0],
                    mse: m.objectives[1],
                })
                .collect(),
        };
        serde_json::to_string_pretty(&report).expect("plain data serialises")
    }
}

/// Optimises ensemble weights on a validation panel.
///
/// After the search the single-learner weight vectors are offered to the
/// archive as well, so the choice is never dominated by any one learner.
pub fn fit_weights(panel: &PredictionPanel, cfg: &MosfoConfig) -> Result<WeightFit> {
    if panel.is_empty() {
        return Err(Error::TooFewItems { needed: 1, got: 0 });
    }
    if panel.actuals.iter().any(|a| a.abs() < MAPE_EPS) {
        return Err(Error::ZeroActual);
    }
    let k = panel.learners();
    let bounds = Bounds::uniform(k, -WEIGHT_BOUND, WEIGHT_BOUND)?;
    let problem = FnProblem::new(bounds, 2, |w: &[f64]| match ensemble_objectives(w, panel) {
        Ok(o) => o.to_vec(),
        Err(_) => vec![f64::NAN, f64::NAN],
    });
    let mut archive = optimize(&problem, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(0x5eed));
    let mut unit_objectives = Vec::with_capacity(k);
    for i in 0..k {
        let u = WeightVector::unit(k, i);
        let o = ensemble_objectives(&u.0, panel)?;
        unit_objectives.push(o);
        archive.insert(u.0, o.to_vec(), &mut rng)?;
    }
    let idx = select_compromise(&archive.objectives()).ok_or(Error::EmptyArchive)?;
    let m = &archive.members()[idx];
    Ok(WeightFit {
        chosen: WeightVector(m.position.clone()),
        chosen_objectives: [m.objectives[0], m.objectives[1]],
        unit_objectives,
        archive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelOffsets {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Additive residual-quantile offsets per confidence level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalModel {
    pub levels: Vec<LevelOffsets>,
}

impl IntervalModel {
    pub fn offsets(&self, level: f64) -> Option<LevelOffsets> {
        self.levels.iter().copied().find(|l| l.level == level)
    }
}

/// Empirical `α/2` and `1 - α/2` quantiles of `actual - combined` residuals.
pub fn fit_intervals(residuals: &[f64], levels: &[f64]) -> Result<IntervalModel> {
    if residuals.len() < MIN_RESIDUALS {
        return Err(Error::TooFewResiduals {
            needed: MIN_RESIDUALS,
            got: residuals.len(),
        });
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidConfig("residuals must be finite".into()));
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let levels = levels
        .iter()
        .map(|&level| {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "confidence level {level} must lie in (0, 1)"
                )));
            }
            let alpha = 1.0 - level;
            Ok(LevelOffsets {
                level,
                lower: quantile_sorted(&sorted, alpha / 2.0),
                upper: quantile_sorted(&sorted, 1.0 - alpha / 2.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalModel { levels })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelInterval {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBundle {
    pub point: Vec<f64>,
    pub intervals: Vec<LevelInterval>,
}

impl ForecastBundle {
    pub fn interval(&self, level: f64) -> Option<&LevelInterval> {
        self.intervals.iter().find(|l| l.level == level)
    }

    /// `index,actual,point,lo95,hi95,lo85,hi85`, one column pair per level.
    pub fn write_csv<W: Write>(&self, actuals: &[f64], mut out: W) -> std::io::Result<()> {
        write!(out, "index,actual,point")?;
        for l in &self.intervals {
            let tag = (l.level * 100.0).round() as u32;
            write!(out, ",lo{tag},hi{tag}")?;
        }
        writeln!(out)?;
        for (i, p) in self.point.iter().enumerate() {
            write!(out, "{i},{},{p}", actuals[i])?;
            for l in &self.intervals {
                write!(out, ",{},{}", l.lower[i], l.upper[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads a forecast CSV written by [`ForecastBundle::write_csv`], returning
/// the actuals and the bundle.
pub fn read_forecast_csv<R: std::io::Read>(input: R) -> Result<(Vec<f64>, ForecastBundle)> {
    let mut rd = csv::Reader::from_reader(input);
    let bad = |line: usize, reason: String| Error::MalformedRow { line, reason };
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| bad(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3
        || header[..3] != ["index", "actual", "point"]
        || header.len().is_multiple_of(2)
    {
        return Err(bad(
            1,
            "expected index,actual,point then lo/hi column pairs".into(),
        ));
    }
    let mut levels = Vec::new();
    for pair in header[3..].chunks(2) {
        let tag = pair[0]
            .strip_prefix("lo")
            .filter(|t| pair[1].strip_prefix("hi") == Some(*t));
        let level = tag
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| bad(1, format!("unexpected interval columns {pair:?}")))?;
        levels.push(level / 100.0);
    }
    let mut actuals = Vec::new();
    let mut point = Vec::new();
    let mut bounds = vec![(Vec::new(), Vec::new()); levels.len()];
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| bad(line, format!("column {} is not a number", j + 1)))
        };
        actuals.push(num(1)?);
        point.push(num(2)?);
        for (k, b) in bounds.iter_mut().enumerate() {
            b.0.push(num(3 + 2 * k)?);
            b.1.push(num(4 + 2 * k)?);
        }
    }
    if actuals.is_empty() {
        return Err(Error::EmptyFile);
    }
    let intervals = levels
        .into_iter()
        .zip(bounds)
        .map(|(level, (lower, upper))| LevelInterval {
            level,
            lower,
            upper,
        })
        .collect();
    Ok((actuals, ForecastBundle { point, intervals }))
}

pub fn forecast(
    panel: &PredictionPanel,
    weights: &WeightVector,
    intervals: &IntervalModel,
) -> Result<ForecastBundle> {
    let point = combine(panel, &weights.0)?;
    let intervals = intervals
        .levels
        .iter()
        .map(|o| LevelInterval {
            level: o.level,
            lower: point.iter().map(|p| p + o.lower).collect(),
            upper: point.iter().map(|p| p + o.upper).collect(),
        })
        .collect();
    Ok(ForecastBundle { point, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mosfo::dominates;
    use proptest::prelude::*;
    use rand::Rng;

    fn panel(preds: Vec<Vec<f64>>, actual: Vec<f64>) -> PredictionPanel {
        PredictionPanel::new(preds, actual).unwrap()
    }

    #[test]
    fn combine_examples() {
        let p = panel(
            vec![
                vec![1.0, 2.0],
                vec![3.0, 4.0],
                vec![5.0, 6.0],
                vec![7.0, 8.0],
            ],
            vec![1.0, 1.0],
        );
        assert_eq!(combine(&p, &[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(combine(&p, &[0.0; 4]).unwrap(), vec![0.0, 0.0]);
        let same = panel(vec![vec![2.0, 6.0]; 4], vec![1.0, 1.0]);
        assert_eq!(combine(&same, &[0.25; 4]).unwrap(), vec![2.0, 6.0]);
        assert!(matches!(
            combine(&p, &[1.0]),
            Err(Error::LengthMismatch(1, 4))
        ));
    }

    #[test]
    fn objective_examples() {
        let p = panel(vec![vec![11.0; 5], vec![10.0; 5]], vec![10.0; 5]);
        let o = ensemble_objectives(&[1.0, 0.0], &p).unwrap();
        assert!((o[0] - 10.0).abs() < 1e-12 && (o[1] - 1.0).abs() < 1e-12);
        assert_eq!(ensemble_objectives(&[0.0, 1.0], &p).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn objective_homogeneity() {
        let preds = vec![vec![3.0, 5.0, 7.5], vec![4.0, 4.5, 9.0]];
        let act = vec![3.5, 5.5, 8.0];
        let w = [0.3, 0.8];
        let a = ensemble_objectives(&w, &panel(preds.clone(), act.clone())).unwrap();
        let c = 3.0;
        let scaled = preds
            .iter()
            .map(|p| p.iter().map(|v| v * c).collect())
            .collect();
        let b =
            ensemble_objectives(&w, &panel(scaled, act.iter().map(|v| v * c).collect())).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((b[1] - c * c * a[1]).abs() < 1e-12);
    }

    #[test]
    fn compromise_tie_break() {
        assert_eq!(
            select_compromise(&[vec![9.0, 1.0], vec![1.0, 9.0]]),
            Some(1)
        );
        assert_eq!(
            select_compromise(&[vec![1.0, 9.0], vec![9.0, 1.0]]),
            Some(0)
        );
        assert_eq!(select_compromise(&[vec![2.0, 2.0]]), Some(0));
        assert_eq!(select_compromise(&[]), None);
    }

    fn noisy_panel(seed: u64, n: usize) -> PredictionPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let act: Vec<f64> = (0..n).map(|i| 8.0 + 2.0 * (i as f64 * 0.2).sin()).collect();
        let preds = (0..4)
            .map(|k| {
                act.iter()
                    .map(|a| a * (1.0 + 0.02 * k as f64) + rng.random_range(-0.5..0.5))
                    .collect()
            })
            .collect();
        panel(preds, act)
    }

    fn quick() -> MosfoConfig {
        MosfoConfig {
            population: 40,
            iterations: 40,
            ..Default::default()
        }
    }

    #[test]
    fn chosen_is_not_dominated_by_units() {
        let p = noisy_panel(3, 80);
        let fit = fit_weights(&p, &quick()).unwrap();
        for u in &fit.unit_objectives {
            assert!(!dominates(u, &fit.chosen_objectives).unwrap());
        }
        assert!(fit
            .archive
            .members()
            .iter()
            .any(|m| m.position == fit.chosen.0));
    }

    #[test]
    fn perfect_learner_reaches_origin() {
        let mut p = noisy_panel(4, 60);
        p.predictions[2] = p.actuals.clone();
        let fit = fit_weights(&p, &quick()).unwrap();
        assert!(fit.chosen_objectives[1] <= 1e-9);
    }

    #[test]
    fn identical_learners_recover_shared_prediction() {
        let base: Vec<f64> = (0..60).map(|i| 6.0 + (i as f64 * 0.3).cos()).collect();
        let p = panel(vec![base.clone(); 4], base.clone());
        let fit = fit_weights(&p, &MosfoConfig::default()).unwrap();
        let c = combine(&p, &fit.chosen.0).unwrap();
        for (a, b) in c.iter().zip(&base) {
            assert!((a - b).abs() / b < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_actual_rejected() {
        let p = panel(vec![vec![1.0, 2.0]], vec![0.0, 1.0]);
        assert!(matches!(fit_weights(&p, &quick()), Err(Error::ZeroActual)));
    }

    #[test]
    fn interval_offsets() {
        let n = 1000;
        let r: Vec<f64> = (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect();
        let m = fit_intervals(&r, &DEFAULT_LEVELS).unwrap();
        let o = m.offsets(0.95).unwrap();
        assert!((o.lower + 0.95).abs() < 0.05 && (o.upper - 0.95).abs() < 0.05);
        let z = fit_intervals(&[0.0; 25], &DEFAULT_LEVELS).unwrap();
        assert!(z.levels.iter().all(|l| l.lower == 0.0 && l.upper == 0.0));
        assert!(matches!(
            fit_intervals(&[0.0; 5], &DEFAULT_LEVELS),
            Err(Error::TooFewResiduals { .. })
        ));
    }

    #[test]
    fn zero_offsets_collapse() {
        let p = panel(vec![vec![1.0, 2.0, 3.0]], vec![1.0, 2.5, 3.0]);
        let im = fit_intervals(&[0.0; 20], &DEFAULT_LEVELS).unwrap();
        let b = forecast(&p, &WeightVector(vec![1.0]), &im).unwrap();
        let l = b.interval(0.95).unwrap();
        assert_eq!(l.lower, b.point);
        assert_eq!(l.upper, b.point);
        let mut csv = Vec::new();
        b.write_csv(p.actuals(), &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("index,actual,point,lo95,hi95,lo85,hi85\n0,1,1,1,1,1,1\n"));
        let (act, back) = read_forecast_csv(text.as_bytes()).unwrap();
        assert_eq!(act, p.actuals());
        assert_eq!(back, b);
        assert!(read_forecast_csv("index,actual\n0,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn nested_levels(r in proptest::collection::vec(-5.0f64..5.0, 20..200)) {
            let m = fit_intervals(&r, &DEFAULT_LEVELS).unwrap();
            let (a, b) = (m.offsets(0.95).unwrap(), m.offsets(0.85).unwrap());
            prop_assert!(a.lower <= b.lower && b.upper <= a.upper && b.lower <= b.upper);
        }

        #[test]
        fn combination_is_linear(a in -1.0f64..1.0, b in -1.0f64..1.0, w1 in proptest::array::uniform4(-1.0f64..1.0), w2 in proptest::array::uniform4(-1.0f64..1.0)) {
            let p = noisy_panel(9, 10);
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
            let lhs = combine(&p, &mix).unwrap();
            let c1 = combine(&p, &w1).unwrap();
            let c2 = combine(&p, &w2).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (a * c1[i] + b * c2[i])).abs() < 1e-9);
            }
        }
    }
}
