use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

use super::archive::ParetoArchive;
use super::problem::{Bounds, MultiObjectiveProblem};
use super::tent::TentMap;
use crate::error::{Error, Result};

const KERNEL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MosfoConfig {
    pub population: usize,
    pub iterations: usize,
    pub pollination_rate: f64,
    pub mortality_rate: f64,
    pub apla: f64,
    /// Step length λ; `None` means `0.05 * ‖ub - lb‖`.
    pub step_scale: Option<f64>,
    pub rng_seed: u64,
    pub archive_capacity: usize,
    pub grid_divisions: usize,
    /// Heavy-tailed jitter on moved individuals, scaled by `λ / sqrt(t)`.
    pub perturbation: bool,
}

impl Default for MosfoConfig {
    fn default() -> Self {
        Self {
            population: 100,
            iterations: 100,
            pollination_rate: 0.1,
            mortality_rate: 0.1,
            apla: 0.7,
            step_scale: None,
            rng_seed: 42,
            archive_capacity: 100,
            grid_divisions: 30,
            perturbation: true,
        }
    }
}

impl MosfoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.population == 0 {
            return bad("population must be positive");
        }
        for r in [self.pollination_rate, self.mortality_rate] {
            if !(0.0..1.0).contains(&r) {
                return bad("pollination and mortality rates must lie in [0, 1)");
            }
        }
        if self.pollination_rate + self.mortality_rate >= 1.0 {
            return bad("pollination_rate + mortality_rate must be below 1");
        }
        if !(self.apla > 0.0 && self.apla < 1.0) {
            return bad("apla must lie in (0, 1)");
        }
        if let Some(s) = self.step_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("step_scale must be finite and non-negative");
            }
        }
        if self.archive_capacity == 0 || self.grid_divisions == 0 {
            return bad("archive capacity and grid divisions must be positive");
        }
        Ok(())
    }

    pub fn resolved_step(&self, bounds: &Bounds) -> f64 {
        self.step_scale.unwrap_or(0.05 * bounds.diagonal())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub position: Vec<f64>,
    pub objectives: Option<Vec<f64>>,
}

fn seeded(cfg: &MosfoConfig) -> Result<(ChaCha8Rng, TentMap)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut seed: f64 = rng.random();
    while seed <= 0.0 {
        seed = rng.random();
    }
    Ok((rng, TentMap::new(seed, cfg.apla)?))
}

fn tent_position(tent: &mut TentMap, bounds: &Bounds) -> Vec<f64> {
    (0..bounds.dim())
        .map(|d| bounds.from_unit(d, tent.next().expect("infinite")))
        .collect()
}

/// `population` points drawn from one chained tent sequence.
pub fn init_population(cfg: &MosfoConfig, bounds: &Bounds) -> Result<Vec<Individual>> {
    cfg.validate()?;
    let (_, mut tent) = seeded(cfg)?;
    Ok(fill(cfg.population, bounds, &mut tent))
}

/// Fills coordinates dimension by dimension so that consecutive iterates,
/// which are strongly correlated, never land in the same point.
fn fill(n: usize, bounds: &Bounds, tent: &mut TentMap) -> Vec<Individual> {
    let mut pos = vec![vec![0.0; bounds.dim()]; n];
    for d in 0..bounds.dim() {
        for p in pos.iter_mut() {
            p[d] = bounds.from_unit(d, tent.next().expect("infinite"));
        }
    }
    pos.into_iter()
        .map(|position| Individual {
            position,
            objectives: None,
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Optimizer state between iterations.
pub struct Mosfo<'p, P: MultiObjectiveProblem + ?Sized> {
    problem: &'p P,
    cfg: MosfoConfig,
    step: f64,
    rng: ChaCha8Rng,
    tent: TentMap,
    population: Vec<Individual>,
    archive: ParetoArchive,
    iteration: usize,
}

impl<'p, P: MultiObjectiveProblem + ?Sized> Mosfo<'p, P> {
    /// Tent-initialises and evaluates the population and seeds the archive.
    pub fn new(problem: &'p P, cfg: MosfoConfig) -> Result<Self> {
        cfg.validate()?;
        if problem.objective_count() < 2 {
            return Err(Error::InvalidConfig(
                "at least two objectives are required".into(),
            ));
        }
        let (rng, mut tent) = seeded(&cfg)?;
        let population = fill(cfg.population, problem.bounds(), &mut tent);
        let mut me = Self {
            problem,
            step: cfg.resolved_step(problem.bounds()),
            archive: ParetoArchive::new(cfg.archive_capacity, cfg.grid_divisions),
            cfg,
            rng,
            tent,
            population,
            iteration: 0,
        };
        me.evaluate_and_archive()?;
        Ok(me)
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn archive(&self) -> &ParetoArchive {
        &self.archive
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn into_archive(self) -> ParetoArchive {
        self.archive
    }

    fn evaluate_and_archive(&mut self) -> Result<()> {
        for ind in &mut self.population {
            if ind.objectives.is_none() {
                let obj = self.problem.evaluate(&ind.position);
                if obj.len() != self.problem.objective_count() {
                    return Err(Error::DimensionMismatch {
                        expected: self.problem.objective_count(),
                        got: obj.len(),
                    });
                }
                ind.objectives = Some(obj);
            }
        }
        for ind in &self.population {
            let obj = ind.objectives.clone().expect("evaluated above");
            self.archive
                .insert(ind.position.clone(), obj, &mut self.rng)?;
        }
        Ok(())
    }

    fn jitter(&mut self, x: &mut [f64], t: &StudentT<f64>) {
        if !self.cfg.perturbation {
            return;
        }
        // annealed so late sweeps refine around the front
        let scale = self.step / (self.iteration as f64).sqrt();
        for v in x.iter_mut() {
            *v += t.sample(&mut self.rng) * scale;
        }
        self.problem.bounds().clamp(x);
    }

    fn group_sizes(&self) -> (usize, usize) {
        let n = self.population.len();
        let mut poll = (self.cfg.pollination_rate * n as f64).ceil() as usize;
        let mut mort = (self.cfg.mortality_rate * n as f64).ceil() as usize;
        while poll + mort >= n && mort > 0 {
            mort -= 1;
        }
        while poll + mort >= n && poll > 0 {
            poll -= 1;
        }
        (poll, mort)
    }

    /// One sweep: sun-guided moves, pollination, mortality, evaluation.
    pub fn step(&mut self) -> Result<()> {
        self.iteration += 1;
        let t = StudentT::new(self.iteration as f64).expect("positive degrees of freedom");
        let sun = self
            .archive
            .select_leader(&mut self.rng)
            .ok_or(Error::EmptyArchive)?
            .clone();
        let n = self.population.len();
        let bounds = self.problem.bounds().clone();

        let mut order: Vec<usize> = (0..n).collect();
        let sun_dist: Vec<f64> = self
            .population
            .iter()
            .map(|ind| distance(ind.objectives.as_ref().expect("evaluated"), &sun.objectives))
            .collect();
        order.sort_by(|a, b| sun_dist[*a].total_cmp(&sun_dist[*b]).then(a.cmp(b)));
        let (n_poll, n_mort) = self.group_sizes();
        let mut role = vec![0u8; n];
        for &i in &order[..n_poll] {
            role[i] = 1;
        }
        for &i in &order[n - n_mort..] {
            role[i] = 2;
        }

        // neighbour gaps and the normalised inverse-square kernel
        let gaps: Vec<f64> = (0..n)
            .map(|i| {
                distance(
                    &self.population[i].position,
                    &self.population[(i + n - 1) % n].position,
                )
            })
            .collect();
        let kernel: Vec<f64> = gaps
            .iter()
            .map(|r| 1.0 / (4.0 * PI * r.max(KERNEL_EPS).powi(2)))
            .collect();
        let kmax = kernel.iter().cloned().fold(0.0, f64::max);

        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let current = &self.population[i].position;
            let mut x = match role[i] {
                2 => {
                    next.push(tent_position(&mut self.tent, &bounds));
                    continue;
                }
                1 => {
                    let mate = self
                        .archive
                        .random_member(&mut self.rng)
                        .ok_or(Error::EmptyArchive)?;
                    current
                        .iter()
                        .zip(&mate.position)
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect::<Vec<f64>>()
                }
                _ => {
                    let gap = distance(&sun.position, current);
                    let d = self.step * kernel[i] / kmax * gaps[i];
                    let mut x = current.clone();
                    if gap > 0.0 {
                        for (v, s) in x.iter_mut().zip(&sun.position) {
                            *v += d * (s - *v) / gap;
                        }
                    }
                    x
                }
            };
            bounds.clamp(&mut x);
            self.jitter(&mut x, &t);
            next.push(x);
        }

        for (ind, x) in self.population.iter_mut().zip(next) {
            if ind.position != x {
                ind.position = x;
                ind.objectives = None;
            }
        }
        self.evaluate_and_archive()
    }

    pub fn run(&mut self) -> Result<()> {
        while self.iteration < self.cfg.iterations {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs the optimizer for `cfg.iterations` sweeps and returns its archive.
pub fn optimize<P: MultiObjectiveProblem + ?Sized>(
    problem: &P,
    cfg: &MosfoConfig,
) -> Result<ParetoArchive> {
    let mut m = Mosfo::new(problem, cfg.clone())?;
    m.run()?;
    Ok(m.into_archive())
}
