//! FOX population-based optimizer, a random-search baseline, and the
//! benchmark harness used to compare them.
//!
//! Everything minimizes. Each FOX iteration moves every agent relative to
//! the best position found so far:
//!
//! * **exploitation** (probability 1/2): draw a time vector `T ~ U(0,1)^d`;
//!   the sound-derived distance to the prey is `BestX`, the fox sits half
//!   that distance away, and it jumps with height `0.5 * 9.81 * mean(T)^2`.
//!   The new position is `0.5 * BestX * jump * c`, with `c = c1` with
//!   probability 0.18 and `c2` otherwise.
//! * **exploration**: `BestX + N(0, 1) * MinT * a` per coordinate, where
//!   `a = 2 (1 - t / max_iters)` decays linearly and `MinT` is the smallest
//!   `mean(T) / 2` seen in any earlier exploitation move (initially 1).
//!
//! Moves are clamped to the box. Positions for one iteration are all drawn
//! from the best-so-far at the start of that iteration, each agent from its
//! own RNG stream, and then evaluated in parallel.

mod benchmarks;
mod compare;

pub use benchmarks::{benchmark, Benchmark, BENCHMARK_NAMES};
pub use compare::{compare_optimizers, ComparisonRow, ComparisonTable};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const GRAVITY: f64 = 9.81;
const C1_PROBABILITY: f64 = 0.18;

/// Function to minimize. Must return finite values on the whole box and be
/// callable concurrently.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for F {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::param("bounds need at least one dimension"));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(format!(
                    "invalid bounds in dimension {d}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn sample(&self, rng: &mut rng::Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoxConfig {
    pub pop_size: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for FoxConfig {
    fn default() -> Self {
        Self {
            pop_size: 30,
            max_iters: 500,
            seed: 0,
            c1: 0.18,
            c2: 0.82,
        }
    }
}

impl FoxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::param("pop_size must be at least 2"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        if !(self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::param("c1 and c2 must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_x: Vec<f64>,
    pub best_fitness: f64,
    /// Best-so-far fitness after initialization and after every iteration
    /// (after every evaluation for random search).
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn evaluate_all<O: Objective + ?Sized>(f: &O, positions: &[Vec<f64>]) -> Result<Vec<f64>> {
    let values: Vec<f64> = positions.par_iter().map(|x| f.evaluate(x)).collect();
    for (x, &v) in positions.iter().zip(&values) {
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                value: v,
                position: x.clone(),
            });
        }
    }
    Ok(values)
}

/// Lowest value, earliest index on ties.
fn best_of(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    (best, values[best])
}

pub fn fox_optimize<O: Objective + ?Sized>(f: &O, bounds: &Bounds, cfg: &FoxConfig) -> Result<OptResult> {
    fox_optimize_seeded(f, bounds, cfg, &[])
}

/// Runs FOX with the first agents placed at `initial` (clamped to the box)
/// instead of uniformly at random.
pub fn fox_optimize_seeded<O: Objective + ?Sized>(
    f: &O,
    bounds: &Bounds,
    cfg: &FoxConfig,
    initial: &[Vec<f64>],
) -> Result<OptResult> {
    cfg.validate()?;
    let dim = bounds.dim();
    if let Some(bad) = initial.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }

    let mut positions: Vec<Vec<f64>> = (0..cfg.pop_size)
        .map(|i| match initial.get(i) {
            Some(x) => {
                let mut x = x.clone();
                bounds.clamp(&mut x);
                x
            }
            None => bounds.sample(&mut rng::stream(cfg.seed, &[rng::tag::FOX_INIT, i as u64])),
        })
        .collect();
    let fitness = evaluate_all(f, &positions)?;
    let mut evaluations = positions.len();
    let (i, mut best_fitness) = best_of(&fitness);
    let mut best_x = positions[i].clone();
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    history.push(best_fitness);
    let mut min_t = 1.0f64;

    for t in 0..cfg.max_iters {
        let a = 2.0 * (1.0 - t as f64 / cfg.max_iters as f64);
        let mut iteration_min_t = f64::INFINITY;
        for (i, pos) in positions.iter_mut().enumerate() {
            let mut rng = rng::stream(cfg.seed, &[rng::tag::FOX_STEP, t as u64, i as u64]);
            if rng.random::<f64>() >= 0.5 {
                let mean_t = (0..dim).map(|_| rng.random::<f64>()).sum::<f64>() / dim as f64;
                let jump = 0.5 * GRAVITY * mean_t * mean_t;
                let c = if rng.random::<f64>() < C1_PROBABILITY {
                    cfg.c1
                } else {
                    cfg.c2
                };
                iteration_min_t = iteration_min_t.min(mean_t / 2.0);
                for (p, b) in pos.iter_mut().zip(&best_x) {
                    let dist_fox_prey = 0.5 * b;
                    *p = dist_fox_prey * jump * c;
                }
            } else {
                let step = min_t * a;
                for (p, b) in pos.iter_mut().zip(&best_x) {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = b + z * step;
                }
            }
            bounds.clamp(pos);
        }
        min_t = min_t.min(iteration_min_t);

        let fitness = evaluate_all(f, &positions)?;
        evaluations += positions.len();
        let (i, v) = best_of(&fitness);
        if v < best_fitness {
            best_fitness = v;
            best_x = positions[i].clone();
        }
        history.push(best_fitness);
    }

    Ok(OptResult {
        best_x,
        best_fitness,
        history,
        evaluations,
    })
}

/// Best of `budget` uniform samples from the box.
pub fn random_search<O: Objective + ?Sized>(f: &O, bounds: &Bounds, budget: usize, seed: u64) -> Result<OptResult> {
    if budget == 0 {
        return Err(Error::param("random search budget must be at least 1"));
    }
    let mut rng = rng::stream(seed, &[rng::tag::RANDOM_SEARCH]);
    let positions: Vec<Vec<f64>> = (0..budget).map(|_| bounds.sample(&mut rng)).collect();
    let fitness = evaluate_all(f, &positions)?;
    let mut history = Vec::with_capacity(budget);
    let mut best = 0;
    for (i, &v) in fitness.iter().enumerate() {
        if v < fitness[best] {
            best = i;
        }
        history.push(fitness[best]);
    }
    Ok(OptResult {
        best_x: positions[best].clone(),
        best_fitness: fitness[best],
        history,
        evaluations: budget,
    })
}

/// Anything that can minimize an objective under an evaluation budget.
pub trait Optimizer: Sync {
    fn name(&self) -> String;

    fn minimize(&self, f: &dyn Objective, bounds: &Bounds, budget: usize, seed: u64) -> Result<OptResult>;
}

/// FOX with the iteration count derived from the evaluation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Fox {
    pub pop_size: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for Fox {
    fn default() -> Self {
        let cfg = FoxConfig::default();
        Self {
            pop_size: cfg.pop_size,
            c1: cfg.c1,
            c2: cfg.c2,
        }
    }
}

impl Fox {
    /// Iterations affordable with `budget` evaluations.
    pub fn iterations_for(&self, budget: usize) -> Result<usize> {
        if budget < 2 * self.pop_size {
            return Err(Error::param(format!(
                "budget {budget} is too small for one full FOX iteration with population {}",
                self.pop_size
            )));
        }
        Ok(budget / self.pop_size - 1)
    }
}

impl Optimizer for Fox {
    fn name(&self) -> String {
        "fox".to_string()
    }

    fn minimize(&self, f: &dyn Objective, bounds: &Bounds, budget: usize, seed: u64) -> Result<OptResult> {
        let cfg = FoxConfig {
            pop_size: self.pop_size,
            max_iters: self.iterations_for(budget)?,
            seed,
            c1: self.c1,
            c2: self.c2,
        };
        fox_optimize(f, bounds, &cfg)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSearch;

impl Optimizer for RandomSearch {
    fn name(&self) -> String {
        "random_search".to_string()
    }

    fn minimize(&self, f: &dyn Objective, bounds: &Bounds, budget: usize, seed: u64) -> Result<OptResult> {
        random_search(f, bounds, budget, seed)
    }
}
