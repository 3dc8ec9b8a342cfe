//! The optimizer contract: box-bounded objectives, run records, and the
//! [`Optimizer`] trait every search algorithm implements.

use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

use crate::spiral::SpiralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("objective returned non-finite value {value} at {position:?}")]
    NonFinite { value: f64, position: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid bounds at dimension {index}: lower {lower} > upper {upper}")]
    Bounds { index: usize, lower: f64, upper: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spiral(#[from] SpiralError),
}

/// Per-dimension box constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OptimizeError> {
        if lower.len() != upper.len() {
            return Err(OptimizeError::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(OptimizeError::Config("objective dimension must be positive".into()));
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            // Equal bounds are accepted; they pin a coordinate.
            if lo > hi || !lo.is_finite() || !hi.is_finite() {
                return Err(OptimizeError::Bounds {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// The same `[lower, upper]` interval on every dimension.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, OptimizeError> {
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

    pub fn clamp(&self, position: &mut [f64]) {
        for ((x, &lo), &hi) in position.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(lo, hi);
        }
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position.len() == self.dim()
            && position
                .iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((&x, &lo), &hi)| lo <= x && x <= hi)
    }
}

/// A scalar loss to minimise over a box.
pub trait Objective: Sync {
    fn bounds(&self) -> &Bounds;

    fn evaluate(&self, position: &[f64]) -> f64;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    /// Called once before the evaluations of iteration `iteration` (1-based;
    /// 0 for the initial population). Objectives that rotate over data
    /// subsets use it to select the active subset.
    fn begin_iteration(&self, _iteration: usize) {}
}

/// Objective backed by a closure.
pub struct FnObjective<F> {
    bounds: Bounds,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(bounds: Bounds, f: F) -> Self {
        FnObjective { bounds, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        (self.f)(position)
    }
}

/// Sum of squares.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Evaluates every position in index order, rejecting non-finite losses.
pub(crate) fn evaluate_all(
    objective: &dyn Objective,
    positions: &[Vec<f64>],
) -> Result<Vec<f64>, OptimizeError> {
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        positions.par_iter().map(|p| objective.evaluate(p)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = positions.iter().map(|p| objective.evaluate(p)).collect();

    for (value, position) in values.iter().zip(positions) {
        if !value.is_finite() {
            return Err(OptimizeError::NonFinite {
                value: *value,
                position: position.clone(),
            });
        }
    }
    Ok(values)
}

/// Outcome of one seeded optimisation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    /// Best-so-far fitness after each iteration; length equals the iteration budget.
    pub curve: Vec<f64>,
    pub initial_fitness: f64,
    pub final_position: Vec<f64>,
    pub final_fitness: f64,
    pub evaluations: usize,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn wall_ms(&self) -> f64 {
        self.wall_time.as_secs_f64() * 1e3
    }

    /// `iteration,best_fitness` CSV with 1-based iterations.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("iteration,best_fitness\n");
        for (i, v) in self.curve.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, v);
        }
        out
    }
}

/// A population-based minimiser that can be plugged into the experiment runner.
pub trait Optimizer: Sync {
    /// Display label, e.g. `LMFO5` or `PSO`.
    fn name(&self) -> String;

    /// Flat key-value pairs describing the configuration, for run metadata.
    fn describe(&self) -> Vec<(String, String)>;

    fn optimize(&self, objective: &dyn Objective, seed: u64) -> Result<RunRecord, OptimizeError>;
}

/// Monotonic stopwatch; reports zero on targets without a clock.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}
