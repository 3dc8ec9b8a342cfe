//! Moth-flame optimisation with a pluggable spiral kernel.
//!
//! Moths are candidate positions; flames are the sorted elite memory.
//! Every iteration each moth lands on a spiral around its paired flame,
//! positions are clamped to the box, and the flame set is refreshed with
//! the best individuals of the old flames and the new moths. The flame
//! count shrinks linearly from `n` to 1 over the budget.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::objective::{evaluate_all, Objective, OptimizeError, Optimizer, RunRecord, Stopwatch};
use crate::spiral::SpiralKernel;

/// How often the spiral parameter `t` is drawn within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TDraw {
    /// One `t` per moth, shared by all of its coordinates.
    #[default]
    PerMoth,
    /// A fresh `t` for every coordinate, as in the reference MFO code.
    PerDimension,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfoConfig {
    pub population: usize,
    pub iterations: usize,
    pub kernel: SpiralKernel,
    /// Lower edge of the `t` window at the start of the run.
    pub t_lower_start: f64,
    /// Lower edge of the `t` window at the final iteration.
    pub t_lower_end: f64,
    pub t_draw: TDraw,
}

impl Default for MfoConfig {
    fn default() -> Self {
        MfoConfig {
            population: 50,
            iterations: 500,
            kernel: SpiralKernel::classic(),
            t_lower_start: -1.0,
            t_lower_end: -2.0,
            t_draw: TDraw::PerMoth,
        }
    }
}

impl MfoConfig {
    pub fn with_kernel(mut self, kernel: SpiralKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_t_draw(mut self, t_draw: TDraw) -> Self {
        self.t_draw = t_draw;
        self
    }

    pub fn with_budget(mut self, population: usize, iterations: usize) -> Self {
        self.population = population;
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.population < 2 {
            return Err(OptimizeError::Config("population must be at least 2".into()));
        }
        if self.iterations < 1 {
            return Err(OptimizeError::Config("iterations must be at least 1".into()));
        }
        if !(self.t_lower_end <= self.t_lower_start && self.t_lower_start < 1.0) {
            return Err(OptimizeError::Config(format!(
                "t window requires t_lower_end <= t_lower_start < 1, got {} and {}",
                self.t_lower_end, self.t_lower_start
            )));
        }
        self.kernel.validate()?;
        Ok(())
    }

    /// Lower edge of the `t` window at iteration `l`.
    pub fn t_lower(&self, l: usize) -> f64 {
        let frac = l as f64 / self.iterations as f64;
        self.t_lower_start + frac * (self.t_lower_end - self.t_lower_start)
    }
}

/// Number of flames kept at iteration `l` of `max_iter`:
/// `round(n - l·(n-1)/T)` with halves rounded away from zero.
///
/// `l` is clamped to `[1, max_iter]`.
pub fn flame_count(n: usize, l: usize, max_iter: usize) -> usize {
    let t = max_iter.max(1) as u128;
    let l = (l.max(1) as u128).min(t);
    let n = n.max(1) as u128;
    // Exact rational arithmetic; the numerator is non-negative since l <= T.
    let num = n * t - l * (n - 1);
    ((2 * num + t) / (2 * t)) as usize
}

/// Moves `moth` along the kernel's spiral around `flame`:
/// `|flame - moth|·S(t)·cos(2πt) + flame`, elementwise.
pub fn spiral_update<R: Rng + ?Sized>(
    moth: &[f64],
    flame: &[f64],
    kernel: &SpiralKernel,
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>, OptimizeError> {
    if moth.len() != flame.len() {
        return Err(OptimizeError::Dimension {
            expected: flame.len(),
            got: moth.len(),
        });
    }
    let factor = kernel.radial_envelope(t, rng)? * (TAU * t).cos();
    Ok(moth
        .iter()
        .zip(flame)
        .map(|(&m, &f)| {
            let distance = (f - m).abs();
            if distance == 0.0 {
                f
            } else {
                distance * factor + f
            }
        })
        .collect())
}

/// Population, fitness and flame memory of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    /// Sorted by fitness, best first.
    pub flames: Vec<Vec<f64>>,
    pub flame_fitness: Vec<f64>,
    /// Next iteration to execute, 1-based.
    pub iteration: usize,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

impl SwarmState {
    /// Uniform random population inside the bounds, evaluated and sorted into flames.
    pub fn init<R: Rng + ?Sized>(
        objective: &dyn Objective,
        cfg: &MfoConfig,
        rng: &mut R,
    ) -> Result<Self, OptimizeError> {
        cfg.validate()?;
        let bounds = objective.bounds();
        let positions: Vec<Vec<f64>> = (0..cfg.population)
            .map(|_| {
                bounds
                    .lower()
                    .iter()
                    .zip(bounds.upper())
                    .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect();
        objective.begin_iteration(0);
        let fitness = evaluate_all(objective, &positions)?;

        let keep = flame_count(cfg.population, 1, cfg.iterations);
        let (flames, flame_fitness) = select_flames(
            positions.iter().zip(&fitness).map(|(p, &f)| (p, f)),
            keep,
        );
        Ok(SwarmState {
            best_position: flames[0].clone(),
            best_fitness: flame_fitness[0],
            positions,
            fitness,
            flames,
            flame_fitness,
            iteration: 1,
        })
    }

    /// One full iteration: spiral moves, clamping, evaluation and flame refresh.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        objective: &dyn Objective,
        cfg: &MfoConfig,
        rng: &mut R,
    ) -> Result<(), OptimizeError> {
        let l = self.iteration;
        let active = flame_count(cfg.population, l, cfg.iterations).min(self.flames.len());
        let t_low = cfg.t_lower(l);
        let bounds = objective.bounds();

        let mut moved = Vec::with_capacity(self.positions.len());
        for (i, moth) in self.positions.iter().enumerate() {
            let flame = &self.flames[i.min(active - 1)];
            let mut next = match cfg.t_draw {
                TDraw::PerMoth => {
                    let t = t_low + (1.0 - t_low) * rng.random::<f64>();
                    spiral_update(moth, flame, &cfg.kernel, t, rng)?
                }
                TDraw::PerDimension => {
                    let mut next = Vec::with_capacity(moth.len());
                    for (m, f) in moth.iter().zip(flame) {
                        let t = t_low + (1.0 - t_low) * rng.random::<f64>();
                        next.extend(spiral_update(&[*m], &[*f], &cfg.kernel, t, rng)?);
                    }
                    next
                }
            };
            bounds.clamp(&mut next);
            moved.push(next);
        }

        objective.begin_iteration(l);
        let fitness = evaluate_all(objective, &moved)?;

        let keep = flame_count(cfg.population, (l + 1).min(cfg.iterations), cfg.iterations);
        let candidates = self
            .flames
            .iter()
            .zip(&self.flame_fitness)
            .map(|(p, &f)| (p, f))
            .chain(moved.iter().zip(&fitness).map(|(p, &f)| (p, f)));
        let (flames, flame_fitness) = select_flames(candidates, keep);

        self.positions = moved;
        self.fitness = fitness;
        self.flames = flames;
        self.flame_fitness = flame_fitness;
        if self.flame_fitness[0] < self.best_fitness {
            self.best_fitness = self.flame_fitness[0];
            self.best_position = self.flames[0].clone();
        }
        self.iteration = l + 1;
        Ok(())
    }
}

/// Stable selection of the `keep` best candidates.
fn select_flames<'a>(
    candidates: impl Iterator<Item = (&'a Vec<f64>, f64)>,
    keep: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut pool: Vec<(&Vec<f64>, f64)> = candidates.collect();
    pool.sort_by(|a, b| a.1.total_cmp(&b.1));
    pool.truncate(keep.max(1));
    pool.into_iter().map(|(p, f)| (p.clone(), f)).unzip()
}

/// Runs the full budget from a fresh seeded population.
pub fn optimize(
    objective: &dyn Objective,
    cfg: &MfoConfig,
    seed: u64,
    label: &str,
) -> Result<RunRecord, OptimizeError> {
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SwarmState::init(objective, cfg, &mut rng)?;
    let initial_fitness = state.best_fitness;
    let mut curve = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        state.step(objective, cfg, &mut rng)?;
        curve.push(state.best_fitness);
    }
    Ok(RunRecord {
        algorithm: label.to_string(),
        seed,
        curve,
        initial_fitness,
        final_fitness: state.best_fitness,
        final_position: state.best_position,
        evaluations: cfg.population * (cfg.iterations + 1),
        wall_time: clock.elapsed(),
    })
}

/// MFO as an [`Optimizer`]: plain `MFO` or one of the `LMFO1`–`LMFO6` variants.
#[derive(Debug, Clone, PartialEq)]
pub struct Mfo {
    pub label: String,
    pub config: MfoConfig,
}

impl Mfo {
    /// The original logarithmic-spiral algorithm.
    pub fn classic(config: MfoConfig) -> Self {
        Mfo {
            label: "MFO".into(),
            config,
        }
    }

    /// Variant named after its kernel family, e.g. `LMFO4` for Lituus.
    pub fn variant(config: MfoConfig) -> Self {
        Mfo {
            label: config.kernel.kind.lmfo_name(),
            config,
        }
    }
}

impl Optimizer for Mfo {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn describe(&self) -> Vec<(String, String)> {
        let c = &self.config;
        vec![
            ("algorithm".into(), self.label.clone()),
            ("kernel".into(), c.kernel.kind.to_string()),
            ("q".into(), c.kernel.q.to_string()),
            ("n".into(), c.population.to_string()),
            ("T".into(), c.iterations.to_string()),
            ("t_window".into(), format!("[{}, {}]", c.t_lower_start, c.t_lower_end)),
            (
                "t_draw".into(),
                match c.t_draw {
                    TDraw::PerMoth => "per-moth",
                    TDraw::PerDimension => "per-dimension",
                }
                .into(),
            ),
        ]
    }

    fn optimize(&self, objective: &dyn Objective, seed: u64) -> Result<RunRecord, OptimizeError> {
        optimize(objective, &self.config, seed, &self.label)
    }
}
