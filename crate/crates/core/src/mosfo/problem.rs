use crate::error::{Error, Result};

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl Bounds {
    pub fn new(lb: Vec<f64>, ub: Vec<f64>) -> Result<Self> {
        if lb.len() != ub.len() {
            return Err(Error::LengthMismatch(lb.len(), ub.len()));
        }
        if lb.is_empty() {
            return Err(Error::InvalidConfig(
                "bounds need at least one dimension".into(),
            ));
        }
        if lb.iter().zip(&ub).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidConfig(
                "every lower bound must be below its upper bound".into(),
            ));
        }
        Ok(Self { lb, ub })
    }

    /// The same interval in every dimension.
    pub fn uniform(dim: usize, lb: f64, ub: f64) -> Result<Self> {
        Self::new(vec![lb; dim], vec![ub; dim])
    }

    pub fn dim(&self) -> usize {
        self.lb.len()
    }

    /// Euclidean length of the box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.lb
            .iter()
            .zip(&self.ub)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lb).zip(&self.ub) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lb)
            .zip(&self.ub)
            .all(|((v, l), u)| v >= l && v <= u)
    }

    /// Affine map of a unit-cube coordinate into dimension `d`.
    pub fn from_unit(&self, d: usize, t: f64) -> f64 {
        self.lb[d] + t * (self.ub[d] - self.lb[d])
    }
}

/// Box-constrained minimisation of `objective_count` objectives.
pub trait MultiObjectiveProblem {
    fn bounds(&self) -> &Bounds;
    fn objective_count(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Vec<f64>;
}

/// Adapts a closure into a [`MultiObjectiveProblem`].
pub struct FnProblem<F> {
    bounds: Bounds,
    objective_count: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64>> FnProblem<F> {
    pub fn new(bounds: Bounds, objective_count: usize, f: F) -> Self {
        Self {
            bounds,
            objective_count,
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> MultiObjectiveProblem for FnProblem<F> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn objective_count(&self) -> usize {
        self.objective_count
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}
