//! Orthogonal-array sensitivity sweep over hidden-layer count, spiral
//! constant and mini-batch count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{create_dir, key_values, prepare_data, run_seed, write_file, ExperimentConfig, ExperimentError};
use crate::network::NetworkObjective;

pub const LEVELS_N_LAYER: [usize; 4] = [3, 4, 5, 6];
pub const LEVELS_Q: [f64; 4] = [0.2, 0.4, 0.8, 1.0];
pub const LEVELS_N_BATCH: [usize; 4] = [6, 8, 10, 12];

/// Sixteen level-index triples `[n_layer, q, n_batch]`, each index in `1..=4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPlan {
    pub triples: Vec<[usize; 3]>,
}

impl SweepPlan {
    /// The default 16-row design, as level indices. It is not a
    /// standard L16: some (n_layer, n_batch) pairs repeat.
    pub fn standard() -> Self {
        SweepPlan {
            triples: vec![
                [1, 1, 1],
                [1, 2, 2],
                [1, 3, 3],
                [1, 4, 4],
                [2, 1, 2],
                [2, 2, 1],
                [2, 3, 4],
                [2, 4, 3],
                [3, 1, 1],
                [3, 2, 4],
                [3, 3, 2],
                [3, 4, 3],
                [4, 1, 4],
                [4, 2, 3],
                [4, 3, 2],
                [4, 4, 1],
            ],
        }
    }

    /// The configured plan, or [`SweepPlan::standard`] when none is set.
    pub fn from_config(cfg: &super::SweepConfig) -> Self {
        match &cfg.plan {
            Some(triples) => SweepPlan { triples: triples.clone() },
            None => SweepPlan::standard(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.triples.len() != 16 {
            return Err(ExperimentError::Config(format!(
                "sweep plan needs 16 experiments, got {}",
                self.triples.len()
            )));
        }
        if let Some(bad) = self.triples.iter().find(|t| t.iter().any(|&l| !(1..=4).contains(&l))) {
            return Err(ExperimentError::Config(format!("sweep level index out of 1..=4 in {bad:?}")));
        }
        Ok(())
    }

    /// Whether every level of every factor occurs equally often.
    pub fn is_balanced(&self) -> bool {
        let per_level = self.triples.len() / 4;
        (0..3).all(|f| (1..=4).all(|l| self.triples.iter().filter(|t| t[f] == l).count() == per_level))
            && self.triples.len().is_multiple_of(4)
    }

    /// Level values `(n_layer, q, n_batch)` of experiment `index`.
    pub fn values(&self, index: usize) -> (usize, f64, usize) {
        let [a, b, c] = self.triples[index];
        (LEVELS_N_LAYER[a - 1], LEVELS_Q[b - 1], LEVELS_N_BATCH[c - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub experiment: usize,
    pub n_layer: usize,
    pub q: f64,
    pub n_batch: usize,
    /// Mean full-training-set loss over the sweep's seeds.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub algorithm: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn best(&self) -> &SweepRow {
        self.rows
            .iter()
            .min_by(|a, b| a.loss.total_cmp(&b.loss))
            .expect("sweep table is never empty")
    }

    /// Mean loss of the rows run at spiral constant `q`.
    pub fn q_group_mean(&self, q: f64) -> Option<f64> {
        let group: Vec<f64> = self.rows.iter().filter(|r| r.q == q).map(|r| r.loss).collect();
        (!group.is_empty()).then(|| group.iter().sum::<f64>() / group.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,n_layer,q,n_batch,mse\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.experiment, r.n_layer, r.q, r.n_batch, r.loss);
        }
        out
    }

    pub fn summary(&self) -> String {
        let best = self.best();
        let mut kv = vec![
            ("algorithm".to_string(), self.algorithm.clone()),
            ("best_experiment".into(), best.experiment.to_string()),
            ("best_n_layer".into(), best.n_layer.to_string()),
            ("best_q".into(), best.q.to_string()),
            ("best_n_batch".into(), best.n_batch.to_string()),
            ("best_mse".into(), best.loss.to_string()),
        ];
        for q in LEVELS_Q {
            if let Some(m) = self.q_group_mean(q) {
                kv.push((format!("mean_mse_q{q}"), m.to_string()));
            }
        }
        key_values(&kv)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        create_dir(dir)?;
        Ok(vec![
            write_file(&dir.join("sweep.csv"), &self.to_csv())?,
            write_file(&dir.join("sweep.meta"), &self.summary())?,
        ])
    }
}

/// Runs every plan row `cfg.sweep.runs` times with `cfg.sweep.algorithm`.
pub fn run_sweep(cfg: &ExperimentConfig, plan: &SweepPlan) -> Result<SweepTable, ExperimentError> {
    plan.validate()?;
    cfg.validate()?;
    if cfg.sweep.runs == 0 {
        return Err(ExperimentError::Config("sweep.runs must be at least 1".into()));
    }
    let mut protocol = cfg.protocol.clone();
    if let Some(iterations) = cfg.sweep.iterations {
        protocol.iterations = iterations;
    }
    let data = prepare_data(cfg)?;
    let batch = data.train.to_batch()?;

    let jobs: Vec<(usize, u64)> = (0..plan.triples.len())
        .flat_map(|e| (0..cfg.sweep.runs).map(move |i| (e, run_seed(protocol.base_seed, i))))
        .collect();
    let run_job = |&(e, seed): &(usize, u64)| -> Result<f64, ExperimentError> {
        let (n_layer, q, n_batch) = plan.values(e);
        let spec = data.spec.with_layers(n_layer);
        let objective = NetworkObjective::with_batches(spec, batch.clone(), cfg.network.weight_bound, n_batch)?;
        let mut entry = super::RosterEntry::named(cfg.sweep.algorithm.clone());
        entry.q = Some(q);
        let algorithm = entry.resolve(&protocol)?;
        let optimizer = algorithm.optimizer();
        let record = optimizer
            .optimize(&objective, seed)
            .map_err(|source| ExperimentError::Run {
                algorithm: optimizer.name(),
                seed,
                source,
            })?;
        Ok(objective.full_loss(&record.final_position))
    };

    #[cfg(feature = "parallel")]
    let losses: Vec<f64> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run_job).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let losses: Vec<f64> = jobs.iter().map(run_job).collect::<Result<_, _>>()?;

    let rows = losses
        .chunks(cfg.sweep.runs)
        .enumerate()
        .map(|(e, chunk)| {
            let (n_layer, q, n_batch) = plan.values(e);
            SweepRow {
                experiment: e + 1,
                n_layer,
                q,
                n_batch,
                loss: chunk.iter().sum::<f64>() / chunk.len() as f64,
            }
        })
        .collect();
    Ok(SweepTable {
        algorithm: cfg.sweep.algorithm.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_plan_shape() {
        let plan = SweepPlan::standard();
        plan.validate().unwrap();
        assert!(plan.is_balanced());
        assert_eq!(plan.values(0), (3, 0.2, 6));
        let level3 = SweepPlan { triples: vec![[3, 3, 3]] };
        assert_eq!(level3.values(0), (5, 0.8, 10));
        let q1: Vec<usize> = (0..16).filter(|&e| plan.values(e).1 == 1.0).map(|e| e + 1).collect();
        assert_eq!(q1, vec![4, 8, 12, 16]);
    }

    #[test]
    fn invalid_plans() {
        let mut plan = SweepPlan::standard();
        plan.triples.pop();
        assert!(plan.validate().is_err());
        let mut plan = SweepPlan::standard();
        plan.triples[0] = [0, 1, 1];
        assert!(plan.validate().is_err());
        plan.triples[0] = [1, 1, 2];
        assert!(!plan.is_balanced());
    }

    #[test]
    fn tiny_sweep_runs() {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.n_train = 24;
        cfg.dataset.n_test = 12;
        cfg.dataset.augment_factor = 1;
        cfg.network.n_hidden = 2;
        cfg.protocol.population = 4;
        cfg.protocol.iterations = 3;
        let table = run_sweep(&cfg, &SweepPlan::standard()).unwrap();
        assert_eq!(table.rows.len(), 16);
        assert!(table.rows.iter().all(|r| r.loss.is_finite() && r.loss >= 0.0));
        assert!(table.to_csv().starts_with("experiment,n_layer,q,n_batch,mse\n1,3,0.2,6,"));
        assert!(table.summary().contains("best_q="));
        assert_eq!(table, run_sweep(&cfg, &SweepPlan::standard()).unwrap());
    }
}
