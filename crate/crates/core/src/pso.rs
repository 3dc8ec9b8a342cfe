//! Global-best particle swarm optimisation, used as the comparison baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::objective::{evaluate_all, Objective, OptimizeError, Optimizer, RunRecord, Stopwatch};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub c1: f64,
    pub c2: f64,
    pub population: usize,
    pub iterations: usize,
    /// Inertia weight at the first iteration.
    pub w_start: f64,
    /// Inertia weight at the last iteration.
    pub w_end: f64,
    /// Velocity cap per dimension, as a fraction of that dimension's range.
    pub v_max: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            c1: 2.0,
            c2: 2.0,
            population: 50,
            iterations: 500,
            w_start: 0.9,
            w_end: 0.4,
            v_max: 0.2,
        }
    }
}

impl PsoConfig {
    pub fn with_budget(mut self, population: usize, iterations: usize) -> Self {
        self.population = population;
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.population < 1 {
            return Err(OptimizeError::Config("swarm size must be at least 1".into()));
        }
        if self.iterations < 1 {
            return Err(OptimizeError::Config("iterations must be at least 1".into()));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(OptimizeError::Config("acceleration coefficients must be non-negative".into()));
        }
        if !(self.v_max > 0.0 && self.v_max <= 1.0) {
            return Err(OptimizeError::Config("v_max must lie in (0, 1]".into()));
        }
        if !(self.w_start.is_finite() && self.w_end.is_finite()) {
            return Err(OptimizeError::Config("inertia weights must be finite".into()));
        }
        Ok(())
    }

    /// Inertia at iteration `l`, linear from `w_start` (l = 1) to `w_end` (l = T).
    pub fn inertia(&self, l: usize) -> f64 {
        if self.iterations <= 1 {
            return self.w_start;
        }
        let frac = (l.saturating_sub(1)) as f64 / (self.iterations - 1) as f64;
        self.w_start + frac.min(1.0) * (self.w_end - self.w_start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSwarm {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub personal_best: Vec<Vec<f64>>,
    pub personal_best_fitness: Vec<f64>,
    pub global_best: Vec<f64>,
    pub global_best_fitness: f64,
    /// Next iteration to execute, 1-based.
    pub iteration: usize,
}

impl ParticleSwarm {
    /// Uniform positions inside the bounds, zero velocities.
    pub fn init<R: Rng + ?Sized>(
        objective: &dyn Objective,
        cfg: &PsoConfig,
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
        let best = argmin(&fitness);
        Ok(ParticleSwarm {
            velocities: vec![vec![0.0; bounds.dim()]; cfg.population],
            global_best: positions[best].clone(),
            global_best_fitness: fitness[best],
            personal_best: positions.clone(),
            personal_best_fitness: fitness,
            positions,
            iteration: 1,
        })
    }

    /// One synchronous velocity/position update of every particle.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        objective: &dyn Objective,
        cfg: &PsoConfig,
        rng: &mut R,
    ) -> Result<(), OptimizeError> {
        let bounds = objective.bounds();
        let w = cfg.inertia(self.iteration);
        let caps: Vec<f64> = bounds
            .lower()
            .iter()
            .zip(bounds.upper())
            .map(|(lo, hi)| cfg.v_max * (hi - lo))
            .collect();

        for i in 0..self.positions.len() {
            let x = &mut self.positions[i];
            let v = &mut self.velocities[i];
            let pbest = &self.personal_best[i];
            for d in 0..x.len() {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = w * v[d]
                    + cfg.c1 * r1 * (pbest[d] - x[d])
                    + cfg.c2 * r2 * (self.global_best[d] - x[d]);
                v[d] = vel.clamp(-caps[d], caps[d]);
                x[d] += v[d];
            }
            bounds.clamp(x);
        }

        objective.begin_iteration(self.iteration);
        let fitness = evaluate_all(objective, &self.positions)?;
        for (i, &f) in fitness.iter().enumerate() {
            if f < self.personal_best_fitness[i] {
                self.personal_best_fitness[i] = f;
                self.personal_best[i].clone_from(&self.positions[i]);
            }
        }
        let best = argmin(&self.personal_best_fitness);
        if self.personal_best_fitness[best] < self.global_best_fitness {
            self.global_best_fitness = self.personal_best_fitness[best];
            self.global_best.clone_from(&self.personal_best[best]);
        }
        self.iteration += 1;
        Ok(())
    }
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub fn pso_optimize(
    objective: &dyn Objective,
    cfg: &PsoConfig,
    seed: u64,
) -> Result<RunRecord, OptimizeError> {
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swarm = ParticleSwarm::init(objective, cfg, &mut rng)?;
    let initial_fitness = swarm.global_best_fitness;
    let mut curve = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        swarm.step(objective, cfg, &mut rng)?;
        curve.push(swarm.global_best_fitness);
    }
    Ok(RunRecord {
        algorithm: "PSO".into(),
        seed,
        curve,
        initial_fitness,
        final_fitness: swarm.global_best_fitness,
        final_position: swarm.global_best,
        evaluations: cfg.population * (cfg.iterations + 1),
        wall_time: clock.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pso {
    pub config: PsoConfig,
}

impl Optimizer for Pso {
    fn name(&self) -> String {
        "PSO".into()
    }

    fn describe(&self) -> Vec<(String, String)> {
        let c = &self.config;
        vec![
            ("algorithm".into(), "PSO".into()),
            ("c1".into(), c.c1.to_string()),
            ("c2".into(), c.c2.to_string()),
            ("w_start".into(), c.w_start.to_string()),
            ("w_end".into(), c.w_end.to_string()),
            ("v_max".into(), c.v_max.to_string()),
            ("n".into(), c.population.to_string()),
            ("T".into(), c.iterations.to_string()),
        ]
    }

    fn optimize(&self, objective: &dyn Objective, seed: u64) -> Result<RunRecord, OptimizeError> {
        pso_optimize(objective, &self.config, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{sphere, Bounds, FnObjective};

    fn sphere_obj(dim: usize) -> FnObjective<fn(&[f64]) -> f64> {
        FnObjective::new(Bounds::uniform(dim, -10.0, 10.0).unwrap(), sphere)
    }

    #[test]
    fn particle_at_best_with_zero_velocity_stays() {
        let obj = sphere_obj(2);
        let cfg = PsoConfig::default().with_budget(1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut swarm = ParticleSwarm::init(&obj, &cfg, &mut rng).unwrap();
        let before = swarm.positions[0].clone();
        swarm.step(&obj, &cfg, &mut rng).unwrap();
        assert_eq!(swarm.positions[0], before);
    }

    #[test]
    fn null_dynamics_are_stationary() {
        let obj = sphere_obj(3);
        let cfg = PsoConfig {
            c1: 0.0,
            c2: 0.0,
            w_start: 1.0,
            w_end: 1.0,
            ..PsoConfig::default().with_budget(1, 20)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut swarm = ParticleSwarm::init(&obj, &cfg, &mut rng).unwrap();
        let start = swarm.positions.clone();
        for _ in 0..20 {
            swarm.step(&obj, &cfg, &mut rng).unwrap();
            assert_eq!(swarm.positions, start);
        }
    }

    #[test]
    fn frozen_swarm_without_inertia_or_attraction() {
        let obj = sphere_obj(3);
        let cfg = PsoConfig {
            c1: 0.0,
            c2: 0.0,
            w_start: 0.0,
            w_end: 0.0,
            ..PsoConfig::default().with_budget(8, 10)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut swarm = ParticleSwarm::init(&obj, &cfg, &mut rng).unwrap();
        swarm.step(&obj, &cfg, &mut rng).unwrap();
        assert!(swarm.velocities.iter().flatten().all(|&v| v == 0.0));
        let after_one = swarm.positions.clone();
        swarm.step(&obj, &cfg, &mut rng).unwrap();
        assert_eq!(swarm.positions, after_one);
    }

    #[test]
    fn gbest_monotone_and_reproducible() {
        let obj = sphere_obj(5);
        let cfg = PsoConfig::default().with_budget(20, 60);
        let a = pso_optimize(&obj, &cfg, 42).unwrap();
        let b = pso_optimize(&obj, &cfg, 42).unwrap();
        assert_eq!(a.curve, b.curve);
        assert!(a.curve.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.final_fitness < a.initial_fitness);
    }

    #[test]
    fn constant_objective() {
        let obj = FnObjective::new(Bounds::uniform(2, -1.0, 1.0).unwrap(), |_: &[f64]| -3.0);
        let rec = pso_optimize(&obj, &PsoConfig::default().with_budget(5, 10), 0).unwrap();
        assert!(rec.curve.iter().all(|&v| v == -3.0));
    }

    #[test]
    fn inertia_schedule() {
        let cfg = PsoConfig::default().with_budget(10, 11);
        assert_eq!(cfg.inertia(1), 0.9);
        assert!((cfg.inertia(11) - 0.4).abs() < 1e-15);
        assert!((cfg.inertia(6) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn positions_clamped() {
        let obj = FnObjective::new(Bounds::uniform(4, 0.0, 1.0).unwrap(), |x: &[f64]| -x.iter().sum::<f64>());
        let cfg = PsoConfig::default().with_budget(10, 30);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut swarm = ParticleSwarm::init(&obj, &cfg, &mut rng).unwrap();
        for _ in 0..30 {
            swarm.step(&obj, &cfg, &mut rng).unwrap();
            assert!(swarm.positions.iter().all(|p| obj.bounds().contains(p)));
        }
    }

    #[test]
    fn invalid_config() {
        let obj = sphere_obj(2);
        let bad = PsoConfig { v_max: 0.0, ..PsoConfig::default() };
        assert!(pso_optimize(&obj, &bad, 0).is_err());
        let bad = PsoConfig { c1: -1.0, ..PsoConfig::default() };
        assert!(pso_optimize(&obj, &bad, 0).is_err());
    }
}
