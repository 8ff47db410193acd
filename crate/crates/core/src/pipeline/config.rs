use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::synth::SynthConfig;
use crate::error::{Error, Result};
use crate::ficmg::FicmgConfig;
use crate::learners::{Activation, LearnerConfig, LearnerKind};
use crate::mosfo::{MosfoConfig, ZdtKind};
use crate::timeseries::SplitSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    Paper,
    #[default]
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "desk" => Ok(Self::Desk),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset `{other}` (expected paper or desk)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Desk => "desk",
        })
    }
}

/// Everything a run needs, read from flat `key = value` text.
///
/// Learner keys (`learner.*`) are stored as overrides and applied on top of
/// the preset for each learner, since the paper-sized preset differs per
/// learner.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_path: Option<PathBuf>,
    pub window_size: usize,
    pub lag: usize,
    pub split: SplitSpec,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub preset: Preset,
    pub folds: usize,
    pub ficmg: FicmgConfig,
    pub mosfo: MosfoConfig,
    pub synth: SynthConfig,
    pub problem: ZdtKind,
    pub problem_dim: usize,
    learner_overrides: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            window_size: 36,
            lag: 4,
            split: SplitSpec::default(),
            levels: vec![0.95, 0.85],
            seed: 42,
            preset: Preset::Desk,
            folds: 5,
            ficmg: FicmgConfig::default(),
            mosfo: MosfoConfig::default(),
            synth: SynthConfig::default(),
            problem: ZdtKind::Zdt1,
            problem_dim: 4,
            learner_overrides: BTreeMap::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn apply_learner_key(c: &mut LearnerConfig, key: &str, v: &str) -> Result<()> {
    match key {
        "learning_rate" => c.learning_rate = parse(key, v)?,
        "batch_size" => c.batch_size = parse(key, v)?,
        "hidden_sizes" => c.hidden_sizes = parse_list(key, v)?,
        "epochs" => c.epochs = parse(key, v)?,
        "tree_count" => c.tree_count = parse(key, v)?,
        "max_depth" => c.max_depth = parse(key, v)?,
        "boosting_rounds" => c.boosting_rounds = parse(key, v)?,
        "lambda_reg" => c.lambda_reg = parse(key, v)?,
        "gamma_reg" => c.gamma_reg = parse(key, v)?,
        "boost_eta" => c.boost_eta = parse(key, v)?,
        "rf_max_depth" => {
            c.rf_max_depth = if v == "none" {
                None
            } else {
                Some(parse(key, v)?)
            }
        }
        "rf_bootstrap" => c.rf_bootstrap = parse(key, v)?,
        "rf_max_features" => {
            c.rf_max_features = if v == "none" {
                None
            } else {
                Some(parse(key, v)?)
            }
        }
        "conv_channels" => c.conv_channels = parse(key, v)?,
        "conv_kernel" => c.conv_kernel = parse(key, v)?,
        "conv_activation" => {
            c.conv_activation = match v {
                "linear" => Activation::Linear,
                "tanh" => Activation::Tanh,
                "relu" => Activation::Relu,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "learner.conv_activation: unknown `{v}`"
                    )))
                }
            }
        }
        "clip_norm" => c.clip_norm = parse(key, v)?,
        _ => return Err(Error::InvalidConfig(format!("unknown key `learner.{key}`"))),
    }
    Ok(())
}

impl RunConfig {
    /// Parses config text over the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", n + 1))
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Assigns one key. Used for both file lines and command-line overrides.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        if let Some(lk) = key.strip_prefix("learner.") {
            apply_learner_key(&mut LearnerConfig::default(), lk, v)?;
            self.learner_overrides.insert(lk.to_string(), v.to_string());
            return Ok(());
        }
        match key {
            "data_path" => self.data_path = Some(PathBuf::from(v)),
            "window_size" => self.window_size = parse(key, v)?,
            "lag" => self.lag = parse(key, v)?,
            "train_frac" => self.split.train_frac = parse(key, v)?,
            "val_frac" => self.split.val_frac = parse(key, v)?,
            "test_frac" => self.split.test_frac = parse(key, v)?,
            "levels" => self.levels = parse_list(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "preset" => self.preset = v.parse()?,
            "folds" => self.folds = parse(key, v)?,
            "ficmg.r1" => self.ficmg.r1 = parse(key, v)?,
            "ficmg.r2" => self.ficmg.r2 = parse(key, v)?,
            "ficmg.w" => self.ficmg.w = parse(key, v)?,
            "ficmg.max_iters" => self.ficmg.max_iters = parse(key, v)?,
            "ficmg.tol" => self.ficmg.tol = parse(key, v)?,
            "ficmg.cluster_count" => self.ficmg.cluster_count = parse(key, v)?,
            "mosfo.population" => self.mosfo.population = parse(key, v)?,
            "mosfo.iterations" => self.mosfo.iterations = parse(key, v)?,
            "mosfo.pollination_rate" => self.mosfo.pollination_rate = parse(key, v)?,
            "mosfo.mortality_rate" => self.mosfo.mortality_rate = parse(key, v)?,
            "mosfo.apla" => self.mosfo.apla = parse(key, v)?,
            "mosfo.step_scale" => {
                self.mosfo.step_scale = if v == "auto" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "mosfo.archive_capacity" => self.mosfo.archive_capacity = parse(key, v)?,
            "mosfo.grid_divisions" => self.mosfo.grid_divisions = parse(key, v)?,
            "mosfo.perturbation" => self.mosfo.perturbation = parse(key, v)?,
            "synth.length" => self.synth.length = parse(key, v)?,
            "synth.mean" => self.synth.mean = parse(key, v)?,
            "synth.amplitude" => self.synth.amplitude = parse(key, v)?,
            "synth.period" => self.synth.period = parse(key, v)?,
            "synth.ar_phi" => self.synth.ar_phi = parse(key, v)?,
            "synth.noise_sd" => self.synth.noise_sd = parse(key, v)?,
            "synth.gap_rate" => self.synth.gap_rate = parse(key, v)?,
            "problem" => self.problem = v.parse()?,
            "problem_dim" => self.problem_dim = parse(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        SplitSpec::new(
            self.split.train_frac,
            self.split.val_frac,
            self.split.test_frac,
        )?;
        if self.lag == 0 || self.window_size < 2 {
            return Err(Error::InvalidConfig(
                "lag must be at least 1 and window_size at least 2".into(),
            ));
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::InvalidConfig(
                "levels must be values in (0, 1)".into(),
            ));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be at least 2".into()));
        }
        if self.problem_dim < 2 {
            return Err(Error::InvalidConfig(
                "problem_dim must be at least 2".into(),
            ));
        }
        self.ficmg.validate()?;
        self.mosfo_config().validate()?;
        self.synth.validate()?;
        for kind in LearnerKind::ALL {
            self.learner_config(kind)?.validate()?;
        }
        Ok(())
    }

    /// Preset settings for `kind` with overrides and the run seed applied.
    pub fn learner_config(&self, kind: LearnerKind) -> Result<LearnerConfig> {
        let mut c = match self.preset {
            Preset::Paper => LearnerConfig::paper(kind),
            Preset::Desk => LearnerConfig::desk(kind),
        };
        c.rng_seed = self.seed;
        for (k, v) in &self.learner_overrides {
            apply_learner_key(&mut c, k, v)?;
        }
        Ok(c)
    }

    pub fn mosfo_config(&self) -> MosfoConfig {
        MosfoConfig {
            rng_seed: self.seed,
            ..self.mosfo.clone()
        }
    }

    /// Canonical `key = value` rendering; parsing it back gives `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("writing to a String");
        if let Some(p) = &self.data_path {
            put("data_path", p.display().to_string());
        }
        put("window_size", self.window_size.to_string());
        put("lag", self.lag.to_string());
        put("train_frac", self.split.train_frac.to_string());
        put("val_frac", self.split.val_frac.to_string());
        put("test_frac", self.split.test_frac.to_string());
        put("levels", join(&self.levels));
        put("seed", self.seed.to_string());
        put("preset", self.preset.to_string());
        put("folds", self.folds.to_string());
        put("ficmg.r1", self.ficmg.r1.to_string());
        put("ficmg.r2", self.ficmg.r2.to_string());
        put("ficmg.w", self.ficmg.w.to_string());
        put("ficmg.max_iters", self.ficmg.max_iters.to_string());
        put("ficmg.tol", self.ficmg.tol.to_string());
        put("ficmg.cluster_count", self.ficmg.cluster_count.to_string());
        let m = &self.mosfo;
        put("mosfo.population", m.population.to_string());
        put("mosfo.iterations", m.iterations.to_string());
        put("mosfo.pollination_rate", m.pollination_rate.to_string());
        put("mosfo.mortality_rate", m.mortality_rate.to_string());
        put("mosfo.apla", m.apla.to_string());
        put(
            "mosfo.step_scale",
            m.step_scale.map_or("auto".into(), |v| v.to_string()),
        );
        put("mosfo.archive_capacity", m.archive_capacity.to_string());
        put("mosfo.grid_divisions", m.grid_divisions.to_string());
        put("mosfo.perturbation", m.perturbation.to_string());
        let y = &self.synth;
        put("synth.length", y.length.to_string());
        put("synth.mean", y.mean.to_string());
        put("synth.amplitude", y.amplitude.to_string());
        put("synth.period", y.period.to_string());
        put("synth.ar_phi", y.ar_phi.to_string());
        put("synth.noise_sd", y.noise_sd.to_string());
        put("synth.gap_rate", y.gap_rate.to_string());
        put("problem", self.problem.to_string());
        put("problem_dim", self.problem_dim.to_string());
        for (k, v) in &self.learner_overrides {
            put(&format!("learner.{k}"), v.clone());
        }
        s
    }

    /// SHA-256 of [`RunConfig::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
