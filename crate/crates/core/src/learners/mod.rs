//! Base point forecasters over lagged feature records.
//!
//! All four learners map a window of `lag` feature records to the next
//! granule's `r` value and share one [`LearnerModel`] fit/predict interface.

mod boost;
mod layers;
mod nets;
mod train;
mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use boost::{boost_fit, forest_fit, BoostParams, BoostedTrees, Forest, ForestParams};
pub use layers::{Activation, ConvShape, DenseShape, GruShape, LstmShape};
pub use nets::{BiLstmNet, CnnGruNet, LstmNet, Net};
pub use train::{train_net, Scaler, TrainParams};
pub use tree::{best_split, grow, GrowParams, Node, SplitChoice, Tree};

use crate::error::{Error, Result};
use crate::ficmg::FeatureRecord;

const FORMAT_TAG: &str = "granwind-model";
const FORMAT_VERSION: u32 = 1;
/// Stage-one epochs are capped here for the stacked learner.
pub const STACK_EPOCH_CAP: usize = 750;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Bilstm,
    CnnGru,
    LstmXgb,
    RandomForest,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        Self::Bilstm,
        Self::CnnGru,
        Self::LstmXgb,
        Self::RandomForest,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::Bilstm => "bilstm",
            Self::CnnGru => "cnn-gru",
            Self::LstmXgb => "lstm-xgb",
            Self::RandomForest => "rf",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bilstm" => Ok(Self::Bilstm),
            "cnn-gru" => Ok(Self::CnnGru),
            "lstm-xgb" => Ok(Self::LstmXgb),
            "rf" | "random-forest" => Ok(Self::RandomForest),
            other => Err(Error::InvalidConfig(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    pub tree_count: usize,
    /// Depth limit of boosted trees.
    pub max_depth: usize,
    pub boosting_rounds: usize,
    pub lambda_reg: f64,
    pub gamma_reg: f64,
    pub rng_seed: u64,
    pub boost_eta: f64,
    /// Depth limit of forest trees; `None` grows them fully.
    pub rf_max_depth: Option<usize>,
    pub rf_bootstrap: bool,
    pub rf_max_features: Option<usize>,
    pub conv_channels: usize,
    pub conv_kernel: usize,
    pub conv_activation: Activation,
    pub clip_norm: f64,
}

/// Small generic settings; the presets below build on these.
impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            batch_size: 32,
            hidden_sizes: vec![16, 8],
            epochs: 200,
            tree_count: 100,
            max_depth: 3,
            boosting_rounds: 100,
            lambda_reg: 1.0,
            gamma_reg: 0.0,
            rng_seed: 42,
            boost_eta: 0.1,
            rf_max_depth: None,
            rf_bootstrap: true,
            rf_max_features: None,
            conv_channels: 16,
            conv_kernel: 3,
            conv_activation: Activation::Tanh,
            clip_norm: 5.0,
        }
    }
}

impl LearnerConfig {
    /// Full-size settings for `kind`.
    pub fn paper(kind: LearnerKind) -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: if kind == LearnerKind::CnnGru {
                150
            } else {
                100
            },
            hidden_sizes: vec![128, 64, 32],
            epochs: 750,
            max_depth: 1,
            ..Self::default()
        }
    }

    /// The full-size settings with small networks and fewer epochs.
    pub fn desk(kind: LearnerKind) -> Self {
        Self {
            hidden_sizes: vec![16, 8],
            epochs: 200,
            ..Self::paper(kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 || self.tree_count == 0 || self.max_depth == 0 {
            return bad("batch_size, epochs, tree_count and max_depth must be at least 1");
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad("hidden_sizes must be a non-empty list of positive sizes");
        }
        if self.lambda_reg < 0.0 || self.gamma_reg < 0.0 {
            return bad("lambda_reg and gamma_reg must be non-negative");
        }
        if !(self.boost_eta > 0.0 && self.boost_eta <= 1.0) {
            return bad("boost_eta must lie in (0, 1]");
        }
        if self.conv_channels == 0 || self.conv_kernel == 0 {
            return bad("conv_channels and conv_kernel must be positive");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }

    fn train_params(&self, epochs: usize) -> TrainParams {
        TrainParams {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs,
            clip_norm: self.clip_norm,
        }
    }

    fn boost_params(&self) -> BoostParams {
        BoostParams {
            rounds: self.boosting_rounds,
            max_depth: self.max_depth,
            lambda: self.lambda_reg,
            gamma: self.gamma_reg,
            eta: self.boost_eta,
        }
    }
}

/// Lagged inputs and next-granule targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    /// Row `i` is records `i .. i + lag` flattened in time order.
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub lag: usize,
    pub record_width: usize,
    /// Position in the record list of each target.
    pub target_positions: Vec<usize>,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// The samples at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            lag: self.lag,
            record_width: self.record_width,
            target_positions: idx.iter().map(|&i| self.target_positions[i]).collect(),
        }
    }

    /// Samples whose target position falls in `range`.
    pub fn by_target_range(&self, range: std::ops::Range<usize>) -> Self {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| range.contains(&self.target_positions[i]))
            .collect();
        self.subset(&idx)
    }
}

pub fn make_supervised(records: &[FeatureRecord], lag: usize) -> Result<SupervisedSet> {
    if lag == 0 {
        return Err(Error::InvalidConfig("lag must be at least 1".into()));
    }
    if records.len() <= lag {
        return Err(Error::TooFewRecords {
            lag,
            got: records.len(),
        });
    }
    let width = records[0].features.len();
    if let Some(r) = records.iter().find(|r| r.features.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            got: r.features.len(),
        });
    }
    let positions: Vec<usize> = (lag..records.len()).collect();
    Ok(SupervisedSet {
        inputs: positions
            .iter()
            .map(|&t| {
                records[t - lag..t]
                    .iter()
                    .flat_map(|r| r.features.iter().copied())
                    .collect()
            })
            .collect(),
        targets: positions.iter().map(|&t| records[t].granule_r()).collect(),
        lag,
        record_width: width,
        target_positions: positions,
    })
}

/// Trained network with its input and target standardisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralModel {
    pub net: Net,
    pub weights: Vec<f64>,
    pub input_scaler: Scaler,
    pub target_scaler: Scaler,
    pub lag: usize,
}

impl NeuralModel {
    fn fit<R: rand::Rng>(
        net: Net,
        data: &SupervisedSet,
        tp: &TrainParams,
        rng: &mut R,
    ) -> Result<Self> {
        let input_scaler = Scaler::fit(&data.inputs);
        let target_scaler = Scaler::fit_scalar(&data.targets);
        let xs: Vec<_> = data
            .inputs
            .iter()
            .map(|r| train::to_sequence(&input_scaler.apply(r), data.lag))
            .collect();
        net.validate(&xs[0])?;
        let ys: Vec<f64> = data
            .targets
            .iter()
            .map(|y| target_scaler.forward1(*y))
            .collect();
        let weights = train_net(&net, &xs, &ys, tp, rng);
        Ok(Self {
            net,
            weights,
            input_scaler,
            target_scaler,
            lag: data.lag,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.input_scaler.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_scaler.mean.len(),
                got: row.len(),
            });
        }
        let xs = train::to_sequence(&self.input_scaler.apply(row), self.lag);
        Ok(self
            .target_scaler
            .inverse1(self.net.predict(&self.weights, &xs)?))
    }
}

/// LSTM point forecast refined by boosted trees over `inputs ‖ forecast`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub stage1: NeuralModel,
    pub stage2: BoostedTrees,
}

impl StackedModel {
    pub fn stage2_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let s1 = self.stage1.predict_row(row)?;
        Ok(row.iter().copied().chain([s1]).collect())
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        Ok(self.stage2.predict(&self.stage2_row(row)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Params {
    Neural(NeuralModel),
    Stacked(StackedModel),
    Forest(Forest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerModel {
    pub kind: LearnerKind,
    pub config: LearnerConfig,
    pub params: Params,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: LearnerModel,
}

pub fn fit(kind: LearnerKind, data: &SupervisedSet, cfg: &LearnerConfig) -> Result<LearnerModel> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: data.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let width = data.record_width;
    let params = match kind {
        LearnerKind::Bilstm => Params::Neural(NeuralModel::fit(
            Net::bilstm(width, &cfg.hidden_sizes),
            data,
            &cfg.train_params(cfg.epochs),
            &mut rng,
        )?),
        LearnerKind::CnnGru => Params::Neural(NeuralModel::fit(
            Net::cnn_gru(
                width,
                cfg.conv_channels,
                cfg.conv_kernel,
                cfg.conv_activation,
                &cfg.hidden_sizes,
            ),
            data,
            &cfg.train_params(cfg.epochs),
            &mut rng,
        )?),
        LearnerKind::LstmXgb => {
            let stage1 = NeuralModel::fit(
                Net::lstm(width, &cfg.hidden_sizes),
                data,
                &cfg.train_params(cfg.epochs.min(STACK_EPOCH_CAP)),
                &mut rng,
            )?;
            let mut model = StackedModel {
                stage1,
                stage2: BoostedTrees {
                    base: 0.0,
                    trees: Vec::new(),
                    objective: Vec::new(),
                    degenerate: false,
                },
            };
            let rows = data
                .inputs
                .iter()
                .map(|r| model.stage2_row(r))
                .collect::<Result<Vec<_>>>()?;
            model.stage2 = boost_fit(&rows, &data.targets, &cfg.boost_params())?;
            Params::Stacked(model)
        }
        LearnerKind::RandomForest => Params::Forest(forest_fit(
            &data.inputs,
            &data.targets,
            &ForestParams {
                trees: cfg.tree_count,
                max_depth: cfg.rf_max_depth,
                bootstrap: cfg.rf_bootstrap,
                max_features: cfg.rf_max_features,
                seed: cfg.rng_seed,
            },
        )?),
    };
    Ok(LearnerModel {
        kind,
        config: cfg.clone(),
        params,
    })
}

impl LearnerModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        match &self.params {
            Params::Neural(m) => m.predict_row(row),
            Params::Stacked(m) => m.predict_row(row),
            Params::Forest(f) => {
                if row.len() != f.width {
                    return Err(Error::DimensionMismatch {
                        expected: f.width,
                        got: row.len(),
                    });
                }
                Ok(f.predict(row))
            }
        }
    }

    pub fn predict(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let env = Envelope {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer(out, &env).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let env: Envelope =
            serde_json::from_reader(input).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if env.format != FORMAT_TAG {
            return Err(Error::ModelFormat(format!(
                "unexpected format tag `{}`",
                env.format
            )));
        }
        if env.version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {}",
                env.version
            )));
        }
        Ok(env.model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize, width: usize) -> FeatureRecord {
        let mut features: Vec<f64> = (0..width).map(|k| (i * 10 + k) as f64).collect();
        // r sits second to last
        features[width - 2] = i as f64 + 0.5;
        FeatureRecord {
            window_index: i,
            features,
            nearest_cluster: 0,
        }
    }

    fn sinusoid_records(n: usize) -> Vec<FeatureRecord> {
        (0..n)
            .map(|i| {
                let r = 8.0 + 3.0 * (i as f64 * 0.3).sin() + 0.5 * (i as f64 * 0.07).cos();
                let u = 0.5 + 0.4 * (i as f64 * 0.3).cos();
                FeatureRecord {
                    window_index: i,
                    features: vec![u, 1.0 - u, 0.0, r - 1.5, r, r + 1.5],
                    nearest_cluster: 0,
                }
            })
            .collect()
    }

    #[test]
    fn supervised_indexing() {
        let recs: Vec<_> = (0..5).map(|i| record(i, 6)).collect();
        let s = make_supervised(&recs, 2).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.targets[0], 2.5);
        assert_eq!(&s.inputs[0][..6], &recs[0].features[..]);
        assert_eq!(&s.inputs[0][6..], &recs[1].features[..]);
        assert_eq!(make_supervised(&recs[..2], 1).unwrap().len(), 1);
        assert!(matches!(
            make_supervised(&recs[..3], 4),
            Err(Error::TooFewRecords { lag: 4, got: 3 })
        ));
    }

    #[test]
    fn inputs_never_contain_their_target_record() {
        let recs: Vec<_> = (0..30).map(|i| record(i, 6)).collect();
        let s = make_supervised(&recs, 4).unwrap();
        for (row, &pos) in s.inputs.iter().zip(&s.target_positions) {
            for chunk in row.chunks(6) {
                let src = recs.iter().position(|r| r.features == chunk).unwrap();
                assert!(src < pos);
            }
        }
    }

    fn r2(pred: &[f64], y: &[f64]) -> f64 {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let sse: f64 = pred.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        let sst: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
        1.0 - sse / sst
    }

    #[test]
    fn every_learner_fits_a_sinusoid() {
        let s = make_supervised(&sinusoid_records(300), 4).unwrap();
        let train = s.subset(&(0..220).collect::<Vec<_>>());
        let test = s.subset(&(220..s.len()).collect::<Vec<_>>());
        let cfg = LearnerConfig {
            epochs: 60,
            tree_count: 40,
            ..LearnerConfig::default()
        };
        for kind in LearnerKind::ALL {
            let m = fit(kind, &train, &cfg).unwrap();
            let score = r2(&m.predict(&test.inputs).unwrap(), &test.targets);
            assert!(score > 0.8, "{kind}: R2 {score}");
        }
    }

    #[test]
    fn memorising_forest_has_zero_training_error() {
        let s = make_supervised(&sinusoid_records(40), 2).unwrap();
        let cfg = LearnerConfig {
            tree_count: 1,
            rf_bootstrap: false,
            rf_max_features: Some(s.inputs[0].len()),
            ..LearnerConfig::default()
        };
        let m = fit(LearnerKind::RandomForest, &s, &cfg).unwrap();
        assert_eq!(m.predict(&s.inputs).unwrap(), s.targets);
    }

    #[test]
    fn same_seed_same_model_and_round_trip() {
        let s = make_supervised(&sinusoid_records(60), 3).unwrap();
        let cfg = LearnerConfig {
            epochs: 5,
            tree_count: 5,
            boosting_rounds: 5,
            ..LearnerConfig::default()
        };
        for kind in LearnerKind::ALL {
            let a = fit(kind, &s, &cfg).unwrap();
            let b = fit(kind, &s, &cfg).unwrap();
            assert_eq!(a, b);
            let mut buf = Vec::new();
            a.write(&mut buf).unwrap();
            let back = LearnerModel::read(&buf[..]).unwrap();
            assert_eq!(back, a);
            let pa = a.predict(&s.inputs).unwrap();
            let pb = back.predict(&s.inputs).unwrap();
            assert!(pa.iter().zip(&pb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn zero_rounds_stack_returns_base() {
        let s = make_supervised(&sinusoid_records(40), 3).unwrap();
        let cfg = LearnerConfig {
            epochs: 3,
            boosting_rounds: 0,
            ..LearnerConfig::default()
        };
        let m = fit(LearnerKind::LstmXgb, &s, &cfg).unwrap();
        let mean = s.targets.iter().sum::<f64>() / s.len() as f64;
        assert!(m.predict(&s.inputs).unwrap().iter().all(|p| *p == mean));
    }

    fn mse(p: &[f64], y: &[f64]) -> f64 {
        p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
    }

    #[test]
    fn stacking_helps_on_linear_plus_step() {
        // the target is a linear-plus-step function of the previous record
        let xs: Vec<f64> = (0..260)
            .map(|i| (i as f64 * 0.61).sin() + (i as f64 * 0.23).cos())
            .collect();
        let recs: Vec<FeatureRecord> = (0..260)
            .map(|i| {
                let x = xs[i];
                let p = if i == 0 { 0.0 } else { xs[i - 1] };
                let r = 5.0 + 0.8 * p + if p > 0.4 { 2.0 } else { 0.0 };
                FeatureRecord {
                    window_index: i,
                    features: vec![x, r - 1.0, r, r + 1.0],
                    nearest_cluster: 0,
                }
            })
            .collect();
        let s = make_supervised(&recs, 3).unwrap();
        let train = s.subset(&(0..190).collect::<Vec<_>>());
        let val = s.subset(&(190..s.len()).collect::<Vec<_>>());
        let cfg = LearnerConfig {
            epochs: 40,
            ..LearnerConfig::default()
        };
        let m = fit(LearnerKind::LstmXgb, &train, &cfg).unwrap();
        let Params::Stacked(st) = &m.params else {
            unreachable!()
        };
        let stage1: Vec<f64> = val
            .inputs
            .iter()
            .map(|r| st.stage1.predict_row(r).unwrap())
            .collect();
        let stacked = m.predict(&val.inputs).unwrap();
        let (a, b) = (mse(&stacked, &val.targets), mse(&stage1, &val.targets));
        assert!(a <= b, "stacked {a} stage one {b}");
    }

    #[test]
    fn perfect_stage_one_needs_no_correction() {
        // the stage-two booster sees targets equal to one of its inputs
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.3).sin(), i as f64 * 0.1])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[1]).collect();
        let b = boost_fit(&x, &y, &LearnerConfig::default().boost_params()).unwrap();
        let fitted: Vec<f64> = x.iter().map(|r| b.predict(r)).collect();
        assert!(mse(&fitted, &y) < 0.01);
    }

    #[test]
    fn forest_beats_median_tree() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mk = |n: usize, rng: &mut ChaCha8Rng| -> (Vec<Vec<f64>>, Vec<f64>) {
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect();
            let y = x
                .iter()
                .map(|v| 3.0 * v[0] - 2.0 * v[1] + v[2] + rng.random_range(-0.3..0.3))
                .collect();
            (x, y)
        };
        let (xt, yt) = mk(200, &mut rng);
        let (xv, yv) = mk(100, &mut rng);
        let f = forest_fit(
            &xt,
            &yt,
            &ForestParams {
                trees: 100,
                max_depth: None,
                bootstrap: true,
                max_features: None,
                seed: 1,
            },
        )
        .unwrap();
        let forest = mse(&xv.iter().map(|r| f.predict(r)).collect::<Vec<_>>(), &yv);
        let mut single: Vec<f64> = f
            .trees
            .iter()
            .map(|t| mse(&xv.iter().map(|r| t.predict(r)).collect::<Vec<_>>(), &yv))
            .collect();
        single.sort_by(f64::total_cmp);
        assert!(
            forest <= single[50],
            "forest {forest} median tree {}",
            single[50]
        );
    }

    #[test]
    fn model_format_errors() {
        assert!(matches!(
            LearnerModel::read(&b"{}"[..]),
            Err(Error::ModelFormat(_))
        ));
        assert!(matches!(
            "svm".parse::<LearnerKind>(),
            Err(Error::InvalidConfig(_))
        ));
        assert_eq!(
            "cnn_gru".parse::<LearnerKind>().unwrap(),
            LearnerKind::CnnGru
        );
    }
}
