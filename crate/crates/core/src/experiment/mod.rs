//! Seeded multi-run experiments over the network objective, and the
//! artifacts they persist (convergence curves, reports, metadata).

mod config;
mod sweep;
mod timing;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    default_roster, AlgorithmSpec, DataSource, DatasetConfig, ExperimentConfig, NetworkConfig,
    ProtocolConfig, RosterEntry, SpiralConfig, SweepConfig, SyntheticConfig, TimingConfig,
};
pub use sweep::{run_sweep, SweepPlan, SweepRow, SweepTable, LEVELS_N_BATCH, LEVELS_N_LAYER, LEVELS_Q};
pub use timing::{run_timing, TimingRow, TimingTable};

use crate::dataset::{self, Dataset, DatasetError, SplitSpec};
use crate::network::{
    classification_rate, forward_batch, ConvExtractor, NetworkError, NetworkObjective, NetworkSpec, ParamVector,
};
use crate::objective::{OptimizeError, RunRecord};
use crate::spiral::{linspace, trace_spiral, trace_to_csv, SpiralError, SpiralKernel};
use crate::stats::{build_report, ComparisonReport, RunBatch, StatsError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("run {algorithm} seed {seed}: {source}")]
    Run {
        algorithm: String,
        seed: u64,
        source: OptimizeError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Spiral(#[from] SpiralError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Short category used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) => "config",
            ExperimentError::Dataset(_) => "dataset",
            ExperimentError::Network(_) => "network",
            ExperimentError::Optimize(_) => "optimizer",
            ExperimentError::Run { .. } => "run",
            ExperimentError::Stats(_) => "stats",
            ExperimentError::Spiral(_) => "spiral",
            ExperimentError::Io { .. } => "io",
        }
    }
}

/// Train/test sets after splitting, augmentation and optional feature extraction.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub spec: NetworkSpec,
}

impl PreparedData {
    /// Training objective with `n_batches` rotating mini-batches.
    pub fn objective(&self, weight_bound: f64, n_batches: usize) -> Result<NetworkObjective, ExperimentError> {
        Ok(NetworkObjective::with_batches(
            self.spec,
            self.train.to_batch()?,
            weight_bound,
            n_batches,
        )?)
    }

    /// Held-out classification rate of `params`, in percent.
    pub fn test_rate(&self, params: &[f64]) -> Result<f64, ExperimentError> {
        let out = forward_batch(&self.spec, params, self.test.features.view())?;
        Ok(classification_rate(out.view(), &self.test.labels)?)
    }

    pub fn train_rate(&self, params: &[f64]) -> Result<f64, ExperimentError> {
        let out = forward_batch(&self.spec, params, self.train.features.view())?;
        Ok(classification_rate(out.view(), &self.train.labels)?)
    }
}

pub fn load_dataset(cfg: &DatasetConfig) -> Result<Dataset, ExperimentError> {
    let path = || cfg.path.as_ref().ok_or_else(|| ExperimentError::Config("dataset.path missing".into()));
    Ok(match cfg.source {
        DataSource::Sonar => dataset::sonar(),
        DataSource::SonarFile => dataset::load_sonar_csv(path()?)?,
        DataSource::LabeledFile => dataset::load_labeled_csv(path()?)?,
        DataSource::Synthetic => {
            let s = &cfg.synthetic;
            dataset::synth_multiclass(s.classes, s.per_class, s.dim, s.separation, s.seed)?
        }
    })
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData, ExperimentError> {
    let d = &cfg.dataset;
    let full = load_dataset(d)?;
    let (train, test) = dataset::split(
        &full,
        &SplitSpec {
            n_train: d.n_train,
            n_test: d.n_test,
            seed: d.split_seed,
            stratified: d.stratified,
        },
    )?;
    if train.is_empty() || test.is_empty() {
        return Err(ExperimentError::Config("train and test sets must both be non-empty".into()));
    }
    let mut train = dataset::augment(&train, d.augment_factor, d.noise_sigma, d.augment_seed)?;
    let mut test = dataset::augment(&test, d.augment_factor, d.noise_sigma, d.augment_seed.wrapping_add(1))?;
    if let Some(conv) = cfg.network.conv {
        let extractor = ConvExtractor::frozen(conv)?;
        train.features = extractor.extract_all(train.features.view())?;
        test.features = extractor.extract_all(test.features.view())?;
    }
    let spec = NetworkSpec::new(train.n_features(), cfg.network.n_hidden, full.n_classes())
        .with_layers(cfg.network.n_layers);
    spec.validate()?;
    Ok(PreparedData { train, test, spec })
}

/// Seed of run `index` (0-based).
pub fn run_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// One finished run with its held-out score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub record: RunRecord,
    /// Loss over the whole training set; differs from the record's final
    /// fitness only when the objective rotates mini-batches.
    pub train_loss: f64,
    pub test_rate: f64,
    pub describe: Vec<(String, String)>,
}

impl ScoredRun {
    /// Key-value sidecar for the run's curve file.
    pub fn metadata(&self) -> String {
        let mut kv: Vec<(String, String)> = vec![("seed".into(), self.record.seed.to_string())];
        kv.extend(self.describe.iter().cloned());
        kv.push(("final_fitness".into(), self.record.final_fitness.to_string()));
        kv.push(("train_loss".into(), self.train_loss.to_string()));
        kv.push(("classification_rate".into(), self.test_rate.to_string()));
        kv.push(("evaluations".into(), self.record.evaluations.to_string()));
        kv.push(("wall_ms".into(), format!("{:.3}", self.record.wall_ms())));
        key_values(&kv)
    }

    pub fn file_stem(&self) -> String {
        format!("{}_seed{}", self.record.algorithm, self.record.seed)
    }
}

/// Results of the multi-algorithm comparison.
#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub report: ComparisonReport,
    /// Runs grouped by algorithm, in roster order, seeds ascending.
    pub runs: Vec<(String, Vec<ScoredRun>)>,
}

impl CompareOutcome {
    pub fn batch(&self, algorithm: &str) -> Option<&[ScoredRun]> {
        self.runs
            .iter()
            .find(|(name, _)| name == algorithm)
            .map(|(_, r)| r.as_slice())
    }

    pub fn final_losses(&self, algorithm: &str) -> Vec<f64> {
        self.batch(algorithm)
            .map(|runs| runs.iter().map(|r| r.train_loss).collect())
            .unwrap_or_default()
    }

    /// Writes `report.csv`, `report.txt` and one curve CSV plus metadata per run.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        let curves = dir.join("curves");
        create_dir(&curves)?;
        let mut written = Vec::new();
        for (_, runs) in &self.runs {
            for run in runs {
                let stem = run.file_stem();
                written.push(write_file(&curves.join(format!("{stem}.csv")), &run.record.curve_csv())?);
                written.push(write_file(&curves.join(format!("{stem}.meta")), &run.metadata())?);
            }
        }
        written.push(write_file(&dir.join("report.csv"), &self.report.to_csv())?);
        written.push(write_file(&dir.join("report.txt"), &self.report.render_text())?);
        Ok(written)
    }
}

/// Runs every roster algorithm `protocol.runs` times on the training objective.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareOutcome, ExperimentError> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let algorithms = cfg.algorithms()?;
    if !algorithms.iter().any(|a| a.name() == cfg.protocol.reference) {
        return Err(ExperimentError::Config(format!(
            "reference `{}` is not in the roster",
            cfg.protocol.reference
        )));
    }
    let jobs: Vec<(usize, u64)> = (0..algorithms.len())
        .flat_map(|a| (0..cfg.protocol.runs).map(move |i| (a, run_seed(cfg.protocol.base_seed, i))))
        .collect();

    let run_job = |&(a, seed): &(usize, u64)| -> Result<ScoredRun, ExperimentError> {
        // Each job owns its objective so mini-batch rotation stays per-run.
        let objective = data.objective(cfg.network.weight_bound, cfg.network.n_batches)?;
        let optimizer = algorithms[a].optimizer();
        let record = optimizer
            .optimize(&objective, seed)
            .map_err(|source| ExperimentError::Run {
                algorithm: optimizer.name(),
                seed,
                source,
            })?;
        let test_rate = data.test_rate(&record.final_position)?;
        Ok(ScoredRun {
            train_loss: objective.full_loss(&record.final_position),
            record,
            test_rate,
            describe: optimizer.describe(),
        })
    };

    #[cfg(feature = "parallel")]
    let results: Vec<ScoredRun> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run_job).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<ScoredRun> = jobs.iter().map(run_job).collect::<Result<_, _>>()?;

    let mut runs: Vec<(String, Vec<ScoredRun>)> = algorithms.iter().map(|a| (a.name(), Vec::new())).collect();
    for ((a, _), run) in jobs.iter().zip(results) {
        runs[*a].1.push(run);
    }
    let batches: Vec<RunBatch> = runs
        .iter()
        .map(|(name, rs)| RunBatch {
            algorithm: name.clone(),
            final_losses: rs.iter().map(|r| r.train_loss).collect(),
            classification_rates: rs.iter().map(|r| r.test_rate).collect(),
            curves: rs.iter().map(|r| r.record.curve.clone()).collect(),
        })
        .collect();
    let report = build_report(&batches, &cfg.protocol.reference)?;
    Ok(CompareOutcome { report, runs })
}

/// Result of a single training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run: ScoredRun,
    pub spec: NetworkSpec,
    pub params: ParamVector,
    pub train_rate: f64,
    pub weight_bound: f64,
}

impl TrainOutcome {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        create_dir(dir)?;
        let stem = self.run.file_stem();
        let param_meta = key_values(&[
            ("algorithm".into(), self.run.record.algorithm.clone()),
            ("seed".into(), self.run.record.seed.to_string()),
            ("n_in".into(), self.spec.n_in.to_string()),
            ("n_hidden".into(), self.spec.n_hidden.to_string()),
            ("n_layers".into(), self.spec.n_layers.to_string()),
            ("n_out".into(), self.spec.n_out.to_string()),
            ("param_length".into(), self.spec.param_length().to_string()),
            ("weight_bound".into(), self.weight_bound.to_string()),
            ("train_loss".into(), self.run.train_loss.to_string()),
            ("train_rate".into(), self.train_rate.to_string()),
            ("test_rate".into(), self.run.test_rate.to_string()),
        ]);
        Ok(vec![
            write_file(&dir.join(format!("{stem}.csv")), &self.run.record.curve_csv())?,
            write_file(&dir.join(format!("{stem}.meta")), &self.run.metadata())?,
            write_file(&dir.join("params.csv"), &self.params.to_csv())?,
            write_file(&dir.join("params.meta"), &param_meta)?,
        ])
    }
}

/// One run of the first roster algorithm at `seed`.
pub fn run_train(cfg: &ExperimentConfig, seed: u64) -> Result<TrainOutcome, ExperimentError> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let algorithm = cfg.roster[0].resolve(&cfg.protocol)?;
    let optimizer = algorithm.optimizer();
    let objective = data.objective(cfg.network.weight_bound, cfg.network.n_batches)?;
    let record = optimizer
        .optimize(&objective, seed)
        .map_err(|source| ExperimentError::Run {
            algorithm: optimizer.name(),
            seed,
            source,
        })?;
    let params = ParamVector::new(&data.spec, record.final_position.clone())?;
    let train_rate = data.train_rate(params.values())?;
    let test_rate = data.test_rate(params.values())?;
    Ok(TrainOutcome {
        run: ScoredRun {
            train_loss: objective.full_loss(params.values()),
            record,
            test_rate,
            describe: optimizer.describe(),
        },
        spec: data.spec,
        params,
        train_rate,
        weight_bound: cfg.network.weight_bound,
    })
}

/// Writes one `t,x,y` trace per requested spiral family.
pub fn emit_spiral_traces(cfg: &SpiralConfig, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    use rand::SeedableRng;
    create_dir(dir)?;
    let samples = linspace(cfg.t_min, cfg.t_max, cfg.samples);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    cfg.kinds
        .iter()
        .map(|&kind| {
            let kernel = SpiralKernel::new(kind, cfg.q);
            let points = trace_spiral(&kernel, &samples, &mut rng)?;
            let name = format!("spiral_{}_{}.csv", kind.lmfo_name(), kind.name());
            write_file(&dir.join(name), &trace_to_csv(&samples, &points))
        })
        .collect()
}

/// `key=value` lines.
pub fn key_values(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.display().to_string(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf, ExperimentError> {
    std::fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}
