//! Wall-clock training and inference timing per roster optimizer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{create_dir, prepare_data, write_file, ExperimentConfig, ExperimentError};
use crate::network::decode_forward;
use crate::objective::Stopwatch;
use crate::stats::median;

/// Minimum measured span for the inference loop, in milliseconds.
const MIN_INFERENCE_MS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub model: String,
    /// `train` or `test`.
    pub phase: &'static str,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn get(&self, model: &str, phase: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.phase == phase)
            .map(|r| r.wall_ms)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,phase,wall_ms\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.model, r.phase, r.wall_ms);
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, ExperimentError> {
        create_dir(dir)?;
        write_file(&dir.join("timing.csv"), &self.to_csv())
    }
}

/// Median training time over `timing.repeats` runs and mean per-sample
/// inference time of the trained network, for each roster entry.
///
/// Runs are sequential so optimizers do not compete for cores.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingTable, ExperimentError> {
    cfg.validate()?;
    let repeats = cfg.timing.repeats.max(1);
    let data = prepare_data(cfg)?;
    let seed = cfg.protocol.base_seed;
    let mut rows = Vec::new();
    for algorithm in cfg.algorithms()? {
        let optimizer = algorithm.optimizer();
        let mut train_ms = Vec::with_capacity(repeats);
        let mut params = Vec::new();
        for _ in 0..repeats {
            let objective = data.objective(cfg.network.weight_bound, cfg.network.n_batches)?;
            let watch = Stopwatch::start();
            let record = optimizer
                .optimize(&objective, seed)
                .map_err(|source| ExperimentError::Run {
                    algorithm: optimizer.name(),
                    seed,
                    source,
                })?;
            train_ms.push(watch.elapsed().as_secs_f64() * 1e3);
            params = record.final_position;
        }

        let inputs = &data.test.features;
        let watch = Stopwatch::start();
        let mut samples = 0usize;
        let mut sink = 0.0;
        loop {
            for row in inputs.rows() {
                let out = decode_forward(&data.spec, &params, row.as_slice().expect("rows are contiguous"))?;
                sink += out[0];
                samples += 1;
            }
            if watch.elapsed().as_secs_f64() * 1e3 >= MIN_INFERENCE_MS {
                break;
            }
        }
        let per_sample = watch.elapsed().as_secs_f64() * 1e3 / samples as f64;
        std::hint::black_box(sink);

        let model = optimizer.name();
        rows.push(TimingRow {
            model: model.clone(),
            phase: "train",
            wall_ms: median(&train_ms).expect("at least one repeat"),
        });
        rows.push(TimingRow {
            model,
            phase: "test",
            wall_ms: per_sample,
        });
    }
    Ok(TimingTable { rows })
}
