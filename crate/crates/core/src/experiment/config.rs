//! TOML experiment configuration.
//!
//! Every section is optional; omitted values fall back to the defaults of
//! the comparison protocol (20 runs of 500 iterations with 50 agents, the
//! bundled sonar set split 150/58 and augmented ×8, a 10-unit hidden layer).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::mfo::{Mfo, MfoConfig, TDraw};
use crate::network::ConvSpec;
use crate::objective::Optimizer;
use crate::pso::{Pso, PsoConfig};
use crate::spiral::{SpiralKernel, SpiralKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub network: NetworkConfig,
    pub protocol: ProtocolConfig,
    pub roster: Vec<RosterEntry>,
    pub sweep: SweepConfig,
    pub timing: TimingConfig,
    pub spirals: SpiralConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            network: NetworkConfig::default(),
            protocol: ProtocolConfig::default(),
            roster: default_roster(),
            sweep: SweepConfig::default(),
            timing: TimingConfig::default(),
            spirals: SpiralConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Plain MFO, the six spiral variants, and PSO.
pub fn default_roster() -> Vec<RosterEntry> {
    std::iter::once("MFO".to_string())
        .chain(SpiralKind::ALL.iter().map(|k| k.lmfo_name()))
        .chain(std::iter::once("PSO".to_string()))
        .map(RosterEntry::named)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// The sonar file compiled into the crate.
    Sonar,
    /// A sonar-format file at `path` (60 features, `M`/`R` label).
    SonarFile,
    /// Any width of features with an integer class label, at `path`.
    LabeledFile,
    /// Gaussian blobs, see `[dataset.synthetic]`.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub split_seed: u64,
    pub stratified: bool,
    pub augment_factor: usize,
    pub noise_sigma: f64,
    pub augment_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            source: DataSource::Sonar,
            path: None,
            synthetic: SyntheticConfig::default(),
            n_train: 150,
            n_test: 58,
            split_seed: 7,
            stratified: true,
            augment_factor: 8,
            noise_sigma: 0.02,
            augment_seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 7,
            per_class: 93,
            dim: 60,
            separation: 0.5,
            seed: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_hidden: usize,
    pub n_layers: usize,
    pub weight_bound: f64,
    /// Mini-batches the training set is cut into; one is evaluated per iteration.
    pub n_batches: usize,
    pub conv: Option<ConvSpec>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n_hidden: 10,
            n_layers: 1,
            weight_bound: 10.0,
            n_batches: 1,
            conv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub runs: usize,
    pub iterations: usize,
    pub population: usize,
    /// Run `i` (0-based) uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Algorithm whose p-value is reported as N/A.
    pub reference: String,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            runs: 20,
            iterations: 500,
            population: 50,
            base_seed: 1,
            reference: "MFO".into(),
        }
    }
}

/// One optimizer in the comparison. `algorithm` is `MFO`, `LMFO1`–`LMFO6`
/// or `PSO`; unset parameters take the algorithm's defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub algorithm: String,
    pub q: Option<f64>,
    pub fermat_standard: Option<bool>,
    pub lituus_epsilon: Option<f64>,
    pub t_lower_start: Option<f64>,
    pub t_lower_end: Option<f64>,
    pub t_draw: Option<TDraw>,
    pub population: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub w_start: Option<f64>,
    pub w_end: Option<f64>,
    pub v_max: Option<f64>,
}

/// A roster entry resolved into a concrete optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmSpec {
    Mfo(Mfo),
    Pso(Pso),
}

impl AlgorithmSpec {
    pub fn name(&self) -> String {
        self.optimizer().name()
    }

    pub fn optimizer(&self) -> &dyn Optimizer {
        match self {
            AlgorithmSpec::Mfo(m) => m,
            AlgorithmSpec::Pso(p) => p,
        }
    }
}

impl RosterEntry {
    pub fn named(algorithm: impl Into<String>) -> Self {
        RosterEntry {
            algorithm: algorithm.into(),
            ..RosterEntry::default()
        }
    }

    pub fn resolve(&self, protocol: &ProtocolConfig) -> Result<AlgorithmSpec, ExperimentError> {
        let name = self.algorithm.trim().to_ascii_uppercase();
        let population = self.population.unwrap_or(protocol.population);
        let iterations = protocol.iterations;
        let reject = |field: &str| {
            Err(ExperimentError::Config(format!(
                "`{field}` does not apply to {}",
                self.algorithm
            )))
        };
        if name == "PSO" {
            if self.q.is_some() || self.fermat_standard.is_some() || self.t_lower_start.is_some() || self.t_draw.is_some() {
                return reject("spiral parameters");
            }
            let d = PsoConfig::default();
            let config = PsoConfig {
                c1: self.c1.unwrap_or(d.c1),
                c2: self.c2.unwrap_or(d.c2),
                w_start: self.w_start.unwrap_or(d.w_start),
                w_end: self.w_end.unwrap_or(d.w_end),
                v_max: self.v_max.unwrap_or(d.v_max),
                population,
                iterations,
            };
            config.validate()?;
            return Ok(AlgorithmSpec::Pso(Pso { config }));
        }
        if self.c1.is_some() || self.c2.is_some() || self.w_start.is_some() || self.v_max.is_some() {
            return reject("PSO parameters");
        }
        let kind = if name == "MFO" {
            SpiralKind::Equiangular
        } else if name.starts_with("LMFO") {
            name.parse::<SpiralKind>()
                .map_err(|e| ExperimentError::Config(e.to_string()))?
        } else {
            return Err(ExperimentError::Config(format!(
                "unknown algorithm `{}` (expected MFO, LMFO1-LMFO6 or PSO)",
                self.algorithm
            )));
        };
        let d = MfoConfig::default();
        let mut kernel = SpiralKernel::new(kind, self.q.unwrap_or(1.0))
            .with_fermat_standard(self.fermat_standard.unwrap_or(false));
        if let Some(eps) = self.lituus_epsilon {
            kernel.lituus_epsilon = eps;
        }
        let config = MfoConfig {
            population,
            iterations,
            kernel,
            t_lower_start: self.t_lower_start.unwrap_or(d.t_lower_start),
            t_lower_end: self.t_lower_end.unwrap_or(d.t_lower_end),
            t_draw: self.t_draw.unwrap_or(d.t_draw),
        };
        config.validate()?;
        Ok(AlgorithmSpec::Mfo(if name == "MFO" {
            Mfo::classic(config)
        } else {
            Mfo::variant(config)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Spiral family whose `q` is swept; `MFO` sweeps the classic spiral.
    pub algorithm: String,
    /// Seeds per experiment; the reported loss is their mean.
    pub runs: usize,
    /// Overrides `protocol.iterations` when set.
    pub iterations: Option<usize>,
    /// Level-index triples `[n_layer, q, n_batch]`; defaults to the shipped 16-row plan.
    pub plan: Option<Vec<[usize; 3]>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            algorithm: "MFO".into(),
            runs: 1,
            iterations: None,
            plan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Training repeats per optimizer; the median is reported.
    pub repeats: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { repeats: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpiralConfig {
    pub kinds: Vec<SpiralKind>,
    pub q: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        SpiralConfig {
            kinds: SpiralKind::ALL.to_vec(),
            q: 1.0,
            t_min: -2.0,
            t_max: 1.0,
            samples: 301,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.roster.is_empty() {
            return Err(ExperimentError::Config("roster is empty".into()));
        }
        if self.protocol.runs == 0 {
            return Err(ExperimentError::Config("protocol.runs must be at least 1".into()));
        }
        let mut seen = Vec::new();
        for entry in &self.roster {
            let name = entry.resolve(&self.protocol)?.name();
            if seen.contains(&name) {
                return Err(ExperimentError::Config(format!("`{name}` appears twice in the roster")));
            }
            seen.push(name);
        }
        if matches!(self.dataset.source, DataSource::SonarFile | DataSource::LabeledFile)
            && self.dataset.path.is_none()
        {
            return Err(ExperimentError::Config("dataset.path is required for file sources".into()));
        }
        if self.sweep.runs == 0 || self.timing.repeats == 0 {
            return Err(ExperimentError::Config("sweep.runs and timing.repeats must be positive".into()));
        }
        Ok(())
    }

    pub fn algorithms(&self) -> Result<Vec<AlgorithmSpec>, ExperimentError> {
        self.roster.iter().map(|e| e.resolve(&self.protocol)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), cfg);
        let names: Vec<String> = cfg.algorithms().unwrap().iter().map(|a| a.name()).collect();
        assert_eq!(names, ["MFO", "LMFO1", "LMFO2", "LMFO3", "LMFO4", "LMFO5", "LMFO6", "PSO"]);
    }

    #[test]
    fn roster_parsing() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            [protocol]
            runs = 3
            iterations = 40
            population = 12

            [[roster]]
            algorithm = "lmfo3"
            q = 0.5
            fermat_standard = true

            [[roster]]
            algorithm = "PSO"
            c1 = 1.5
            "#,
        )
        .unwrap();
        let algs = cfg.algorithms().unwrap();
        match &algs[0] {
            AlgorithmSpec::Mfo(m) => {
                assert_eq!(m.label, "LMFO3");
                assert_eq!(m.config.kernel.q, 0.5);
                assert!(m.config.kernel.fermat_standard);
                assert_eq!((m.config.population, m.config.iterations), (12, 40));
            }
            other => panic!("unexpected {other:?}"),
        }
        match &algs[1] {
            AlgorithmSpec::Pso(p) => assert_eq!((p.config.c1, p.config.c2), (1.5, 2.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "roster = []",
            "[[roster]]\nalgorithm = \"ALO\"",
            "[[roster]]\nalgorithm = \"LMFO9\"",
            "[[roster]]\nalgorithm = \"PSO\"\nq = 1.0",
            "[[roster]]\nalgorithm = \"MFO\"\nc1 = 1.0",
            "[[roster]]\nalgorithm = \"MFO\"\n[[roster]]\nalgorithm = \"mfo\"",
            "[protocol]\nruns = 0",
            "[dataset]\nsource = \"sonar-file\"",
            "[network]\nwidth = 3",
            "[[roster]]\nalgorithm = \"LMFO4\"\nq = 0.0",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "accepted: {text}");
        }
    }
}
