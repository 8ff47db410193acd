use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Node, Tree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub eta: f64,
}

/// Additive trees on squared loss `½(y - ŷ)²` with leaf penalty
/// `γT + ½λΣw²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub base: f64,
    pub trees: Vec<Tree>,
    /// Regularised training objective after the base score and each round.
    pub objective: Vec<f64>,
    /// All targets were equal; every tree is a single leaf.
    pub degenerate: bool,
}

fn penalty(tree: &Tree, lambda: f64, gamma: f64) -> f64 {
    let w = tree.leaf_values();
    gamma * w.len() as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

fn loss(y: &[f64], pred: &[f64]) -> f64 {
    y.iter()
        .zip(pred)
        .map(|(a, b)| 0.5 * (a - b) * (a - b))
        .sum()
}

pub fn boost_fit(x: &[Vec<f64>], y: &[f64], p: &BoostParams) -> Result<BoostedTrees> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if y.len() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: y.len(),
        });
    }
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let degenerate = y.iter().all(|v| *v == y[0]);
    let mut pred = vec![base; y.len()];
    let mut obj = loss(y, &pred);
    let mut model = BoostedTrees {
        base,
        trees: Vec::new(),
        objective: vec![obj],
        degenerate,
    };
    let grow_params = GrowParams {
        max_depth: Some(p.max_depth),
        lambda: p.lambda,
        gamma: p.gamma,
        max_features: None,
        shrinkage: p.eta,
    };
    let h = vec![1.0; y.len()];
    // features are never subsampled here, so the generator is never drawn from
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..p.rounds {
        let g: Vec<f64> = pred.iter().zip(y).map(|(a, b)| a - b).collect();
        let tree = grow(x, &g, &h, (0..y.len()).collect(), &grow_params, &mut rng);
        let next: Vec<f64> = pred
            .iter()
            .zip(x)
            .map(|(v, xi)| v + tree.predict(xi))
            .collect();
        let cand = obj + loss(y, &next) - loss(y, &pred) + penalty(&tree, p.lambda, p.gamma);
        if cand <= obj {
            obj = cand;
            pred = next;
            model.trees.push(tree);
        }
        model.objective.push(obj);
    }
    Ok(model)
}

impl BoostedTrees {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    /// Features per split; `None` means `ceil(sqrt(f))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub width: usize,
    pub degenerate: bool,
}

/// Bagged CART trees; tree `k` draws from its own generator seeded `seed + k`.
pub fn forest_fit(x: &[Vec<f64>], y: &[f64], p: &ForestParams) -> Result<Forest> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if y.len() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: y.len(),
        });
    }
    if p.trees == 0 {
        return Err(Error::InvalidConfig("tree_count must be at least 1".into()));
    }
    let width = x[0].len();
    let mf = p
        .max_features
        .unwrap_or_else(|| (width as f64).sqrt().ceil() as usize)
        .clamp(1, width.max(1));
    let params = GrowParams {
        max_depth: p.max_depth,
        lambda: 0.0,
        gamma: 0.0,
        max_features: Some(mf),
        shrinkage: 1.0,
    };
    let g: Vec<f64> = y.iter().map(|v| -v).collect();
    let h = vec![1.0; y.len()];
    let n = y.len();
    let trees = (0..p.trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(k as u64));
            let rows: Vec<usize> = if p.bootstrap {
                (0..n)
                    .map(|_| rand::Rng::random_range(&mut rng, 0..n))
                    .collect()
            } else {
                (0..n).collect()
            };
            grow(x, &g, &h, rows, &params, &mut rng)
        })
        .collect();
    Ok(Forest {
        trees,
        width,
        degenerate: y.iter().all(|v| *v == y[0]),
    })
}

impl Forest {
    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.tree_predictions(x).iter().sum::<f64>() / self.trees.len() as f64
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }

    pub fn max_depth(&self) -> usize {
        fn depth(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth(t, left).max(depth(t, right)),
            }
        }
        self.trees.iter().map(|t| depth(t, 0)).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn xgb(rounds: usize, depth: usize, lambda: f64, gamma: f64, eta: f64) -> BoostParams {
        BoostParams {
            rounds,
            max_depth: depth,
            lambda,
            gamma,
            eta,
        }
    }

    #[test]
    fn step_data_splits_at_the_step() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 7 { 1.0 } else { 4.0 }).collect();
        let m = boost_fit(&x, &y, &xgb(1, 1, 0.0, 0.0, 1.0)).unwrap();
        let (f, t) = m.trees[0].root_split().unwrap();
        assert_eq!((f, t), (0, 6.5));
        assert!((m.predict(&[3.0]) - 1.0).abs() < 1e-12);
        assert!((m.predict(&[12.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_targets_converge_to_constant() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![2.5; 10];
        let m = boost_fit(&x, &y, &xgb(20, 3, 1.0, 0.0, 0.3)).unwrap();
        assert!(m.degenerate);
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
        assert_eq!(m.predict(&[4.0]), 2.5);
    }

    #[test]
    fn huge_lambda_leaves_base_score() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let m = boost_fit(&x, &y, &xgb(10, 3, 1e12, 0.0, 1.0)).unwrap();
        assert!((m.predict(&[9.0]) - m.base).abs() < 1e-6);
        assert_eq!(m.base, 28.5);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..80)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (6.0 * v[0]).sin() + v[1] + rng.random_range(-0.1..0.1))
            .collect();
        let m = boost_fit(&x, &y, &xgb(60, 3, 1.0, 0.05, 0.3)).unwrap();
        assert_eq!(m.objective.len(), 61);
        assert!(m.objective.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.objective[60] < 0.5 * m.objective[0]);
    }

    #[test]
    fn forest_is_tree_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|v| v[0] + 2.0 * v[1]).collect();
        let p = ForestParams {
            trees: 7,
            max_depth: None,
            bootstrap: true,
            max_features: None,
            seed: 3,
        };
        let f = forest_fit(&x, &y, &p).unwrap();
        for xi in &x {
            let per = f.tree_predictions(xi);
            assert_eq!(f.predict(xi), per.iter().sum::<f64>() / 7.0);
        }
        assert_eq!(f, forest_fit(&x, &y, &p).unwrap());
        assert!(f.node_count() > 7 && f.max_depth() > 3);
    }

    #[test]
    fn identical_trees_average_to_one() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i % 5) * 2) as f64).collect();
        let p = ForestParams {
            trees: 5,
            max_depth: Some(3),
            bootstrap: false,
            max_features: Some(2),
            seed: 0,
        };
        let f = forest_fit(&x, &y, &p).unwrap();
        assert!(f.trees.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(f.max_depth(), 3);
        assert!(f.node_count() <= 5 * 15);
        for xi in &x {
            assert!((f.predict(xi) - f.trees[0].predict(xi)).abs() < 1e-12);
        }
    }
}
