//! Regression trees grown from first- and second-order gradient statistics.
//!
//! With `g = -y`, `h = 1` and no regularisation this is plain CART on squared
//! error; boosting passes residual gradients and its penalties instead.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub lambda: f64,
    pub gamma: f64,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
    /// Multiplier applied to every leaf weight.
    pub shrinkage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value } => Some(*value),
                _ => None,
            })
            .collect()
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda > 0.0 {
        g * g / (h + lambda)
    } else {
        0.0
    }
}

fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    if h + lambda > 0.0 {
        -g / (h + lambda)
    } else {
        0.0
    }
}

/// Midpoint strictly below `b` so that `a <= t < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

/// Best split of `rows` over `features`, ties to the lowest feature then the
/// lowest threshold. Only splits with positive net gain are returned.
pub fn best_split(
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    rows: &[usize],
    features: &[usize],
    lambda: f64,
    gamma: f64,
) -> Option<SplitChoice> {
    let gt: f64 = rows.iter().map(|&i| g[i]).sum();
    let ht: f64 = rows.iter().map(|&i| h[i]).sum();
    let parent = score(gt, ht, lambda);
    let tol = 1e-12 * parent.abs().max(1.0);
    let mut best: Option<SplitChoice> = None;
    let mut order = rows.to_vec();
    for &f in features {
        order.sort_by(|a, b| x[*a][f].total_cmp(&x[*b][f]));
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            gl += g[order[k]];
            hl += h[order[k]];
            let (a, b) = (x[order[k]][f], x[order[k + 1]][f]);
            if a == b {
                continue;
            }
            let gain =
                0.5 * (score(gl, hl, lambda) + score(gt - gl, ht - hl, lambda) - parent) - gamma;
            if gain > tol && best.is_none_or(|s| gain > s.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: midpoint(a, b),
                    gain,
                });
            }
        }
    }
    best
}

/// Grows one tree on the rows in `rows`.
pub fn grow<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    rows: Vec<usize>,
    p: &GrowParams,
    rng: &mut R,
) -> Tree {
    let width = x.first().map_or(0, Vec::len);
    let mut tree = Tree { nodes: Vec::new() };
    // (node index, rows, depth)
    let mut stack = vec![(0usize, rows, 0usize)];
    tree.nodes.push(Node::Leaf { value: 0.0 });
    while let Some((id, rows, depth)) = stack.pop() {
        let gs: f64 = rows.iter().map(|&i| g[i]).sum();
        let hs: f64 = rows.iter().map(|&i| h[i]).sum();
        let leaf = Node::Leaf {
            value: p.shrinkage * leaf_weight(gs, hs, p.lambda),
        };
        let can_split = rows.len() >= 2 && p.max_depth.is_none_or(|d| depth < d);
        let choice = if can_split {
            let features: Vec<usize> = match p.max_features {
                Some(m) if m < width => {
                    let mut f = sample(rng, width, m).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..width).collect(),
            };
            best_split(x, g, h, &rows, &features, p.lambda, p.gamma)
        } else {
            None
        };
        match choice {
            None => tree.nodes[id] = leaf,
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[i][s.feature] <= s.threshold);
                let left = tree.nodes.len();
                tree.nodes.push(Node::Leaf { value: 0.0 });
                tree.nodes.push(Node::Leaf { value: 0.0 });
                tree.nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cart() -> GrowParams {
        GrowParams {
            max_depth: None,
            lambda: 0.0,
            gamma: 0.0,
            max_features: None,
            shrinkage: 1.0,
        }
    }

    #[test]
    fn full_cart_memorises() {
        let x = vec![
            vec![0.0, 5.0],
            vec![1.0, 3.0],
            vec![2.0, 9.0],
            vec![3.0, 1.0],
        ];
        let y = [2.5, -1.0, 7.0, 0.5];
        let g: Vec<f64> = y.iter().map(|v| -v).collect();
        let h = vec![1.0; 4];
        let t = grow(
            &x,
            &g,
            &h,
            (0..4).collect(),
            &cart(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        for (xi, yi) in x.iter().zip(y) {
            assert_eq!(t.predict(xi), yi);
        }
    }

    #[test]
    fn constant_targets_make_one_leaf() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let g = vec![-3.0; 10];
        let h = vec![1.0; 10];
        let t = grow(
            &x,
            &g,
            &h,
            (0..10).collect(),
            &cart(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(t, Tree::leaf(3.0));
    }

    #[test]
    fn ties_pick_lowest_feature() {
        // two identical columns
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64]).collect();
        let g: Vec<f64> = (0..6).map(|i| if i < 3 { 1.0 } else { -1.0 }).collect();
        let h = vec![1.0; 6];
        let s = best_split(&x, &g, &h, &(0..6).collect::<Vec<_>>(), &[0, 1], 0.0, 0.0).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 2.5));
    }

    #[test]
    fn gamma_blocks_weak_splits() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let g = [0.1, 0.1, -0.1, -0.1];
        let h = [1.0; 4];
        let rows: Vec<usize> = (0..4).collect();
        // gain = 0.5 * (0.04/2 + 0.04/2 - 0) = 0.02
        assert!(best_split(&x, &g, &h, &rows, &[0], 0.0, 0.019).is_some());
        assert!(best_split(&x, &g, &h, &rows, &[0], 0.0, 0.021).is_none());
    }
}
