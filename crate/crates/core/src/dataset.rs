//! Sonar returns loading, seeded stratified splitting, jitter augmentation
//! and a synthetic multiclass generator.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{LabeledBatch, NetworkError};

/// Number of frequency-band energies per sonar return.
pub const SONAR_FEATURES: usize = 60;
/// The 208-return mines-vs-rocks sonar file, bundled with the crate.
pub const SONAR_CSV: &str = include_str!("../data/sonar.all-data");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("size error: {0}")]
    Size(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Sonar,
    Synthetic,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            provenance: self.provenance,
        }
    }

    pub fn to_batch(&self) -> Result<LabeledBatch, NetworkError> {
        LabeledBatch::new(self.features.clone(), self.labels.clone(), self.n_classes())
    }

    /// CSV rows of features followed by the label token: `M`/`R` for
    /// the sonar set, integer class index otherwise.
    pub fn to_csv(&self) -> String {
        let sonar = self.provenance == Provenance::Sonar;
        let mut out = String::new();
        for (row, &label) in self.features.rows().into_iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v},");
            }
            if sonar {
                out.push_str(if label == 0 { "M" } else { "R" });
            } else {
                let _ = write!(out, "{label}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the sonar CSV: 60 reals then `M` (cylinder, class 0) or `R` (rock, class 1).
pub fn parse_sonar_csv(text: &str) -> Result<Dataset, DatasetError> {
    parse_rows(text, Some(SONAR_FEATURES), |line, token| match token {
        "M" => Ok(0),
        "R" => Ok(1),
        other => Err(DatasetError::Parse {
            line,
            message: format!("label must be `M` or `R`, got `{other}`"),
        }),
    })
    .map(|(features, labels)| Dataset {
        features,
        labels,
        class_names: vec!["cylinder".into(), "rock".into()],
        provenance: Provenance::Sonar,
    })
}

pub fn load_sonar_csv(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    parse_sonar_csv(&read(path.as_ref())?)
}

/// The bundled sonar file.
pub fn sonar() -> Dataset {
    parse_sonar_csv(SONAR_CSV).expect("bundled sonar data is well-formed")
}

/// Parses rows of reals followed by an integer class index.
pub fn parse_labeled_csv(text: &str) -> Result<Dataset, DatasetError> {
    let (features, labels) = parse_rows(text, None, |line, token| {
        token.parse::<usize>().map_err(|_| DatasetError::Parse {
            line,
            message: format!("label must be a class index, got `{token}`"),
        })
    })?;
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Ok(Dataset {
        features,
        labels,
        class_names: (0..classes).map(|c| format!("class{c}")).collect(),
        provenance: Provenance::File,
    })
}

pub fn load_labeled_csv(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    parse_labeled_csv(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_rows(
    text: &str,
    expected_features: Option<usize>,
    label: impl Fn(usize, &str) -> Result<usize, DatasetError>,
) -> Result<(Array2<f64>, Vec<usize>), DatasetError> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = expected_features;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = raw.split(',').map(str::trim).collect();
        let n_features = tokens.len() - 1;
        match width {
            Some(w) if w != n_features => {
                return Err(DatasetError::Schema(format!(
                    "line {line}: expected {w} features and a label, found {} columns",
                    tokens.len()
                )))
            }
            None if n_features == 0 => {
                return Err(DatasetError::Schema(format!("line {line}: no feature columns")))
            }
            None => width = Some(n_features),
            _ => {}
        }
        for tok in &tokens[..n_features] {
            let v: f64 = tok.parse().map_err(|_| DatasetError::Parse {
                line,
                message: format!("`{tok}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::Parse {
                    line,
                    message: format!("non-finite feature `{tok}`"),
                });
            }
            values.push(v);
        }
        labels.push(label(line, tokens[n_features])?);
    }
    if labels.is_empty() {
        return Err(DatasetError::Schema("no data rows".into()));
    }
    let width = width.unwrap_or(0);
    let features = Array2::from_shape_vec((labels.len(), width), values)
        .map_err(|e| DatasetError::Schema(e.to_string()))?;
    Ok((features, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub stratified: bool,
}

fn yes() -> bool {
    true
}

/// Largest-remainder apportionment of `total` over `counts`, capped by `caps`.
fn apportion(total: usize, counts: &[usize], caps: &[usize]) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let mut quota: Vec<usize> = counts.iter().map(|&c| total * c / n).collect();
    for (q, &cap) in quota.iter_mut().zip(caps) {
        *q = (*q).min(cap);
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Largest fractional remainder first, lower class index on ties.
    order.sort_by_key(|&c| std::cmp::Reverse((total * counts[c]) % n));
    let mut assigned: usize = quota.iter().sum();
    while assigned < total {
        let before = assigned;
        for &c in &order {
            if assigned == total {
                break;
            }
            if quota[c] < caps[c] {
                quota[c] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    quota
}

/// Seeded partition into disjoint train and test parts of exactly the requested sizes.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    let n = ds.len();
    if spec.n_train + spec.n_test > n {
        return Err(DatasetError::Size(format!(
            "cannot draw {} + {} samples from {n}",
            spec.n_train, spec.n_test
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut test) = if spec.stratified {
        let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
        for (i, &l) in ds.labels.iter().enumerate() {
            per_class[l].push(i);
        }
        for idx in &mut per_class {
            idx.shuffle(&mut rng);
        }
        let counts: Vec<usize> = per_class.iter().map(Vec::len).collect();
        let train_q = apportion(spec.n_train, &counts, &counts);
        let room: Vec<usize> = counts.iter().zip(&train_q).map(|(c, t)| c - t).collect();
        let test_q = apportion(spec.n_test, &counts, &room);
        let mut train = Vec::with_capacity(spec.n_train);
        let mut test = Vec::with_capacity(spec.n_test);
        for ((idx, &tr), &te) in per_class.iter().zip(&train_q).zip(&test_q) {
            train.extend_from_slice(&idx[..tr]);
            test.extend_from_slice(&idx[tr..tr + te]);
        }
        (train, test)
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let test = idx[spec.n_train..spec.n_train + spec.n_test].to_vec();
        idx.truncate(spec.n_train);
        (idx, test)
    };
    // Mix classes so contiguous mini-batches are not single-class.
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((ds.select(&train), ds.select(&test)))
}

/// Replicates every sample `factor` times; all but the first copy get
/// Gaussian jitter of `noise_sigma`, clamped to `[0, 1]`.
pub fn augment(ds: &Dataset, factor: usize, noise_sigma: f64, seed: u64) -> Result<Dataset, DatasetError> {
    if factor == 0 {
        return Err(DatasetError::Size("augmentation factor must be at least 1".into()));
    }
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| DatasetError::Size(format!("noise sigma {noise_sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = ds.n_features();
    let mut values = Vec::with_capacity(ds.len() * factor * f);
    let mut labels = Vec::with_capacity(ds.len() * factor);
    for (row, &label) in ds.features.rows().into_iter().zip(&ds.labels) {
        values.extend(row.iter().copied());
        labels.push(label);
        for _ in 1..factor {
            values.extend(row.iter().map(|&v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0)));
            labels.push(label);
        }
    }
    Ok(Dataset {
        features: Array2::from_shape_vec((labels.len(), f), values)
            .expect("row-major buffer matches shape"),
        labels,
        class_names: ds.class_names.clone(),
        provenance: ds.provenance,
    })
}

/// Spread of each synthetic blob around its mean.
const SYNTH_SIGMA: f64 = 0.1;

/// Gaussian blobs in `[0, 1]^dim`. Class `c` is centred at
/// `0.5 + separation·u_c` for a random unit direction `u_c`.
pub fn synth_multiclass(
    classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    if classes < 2 {
        return Err(DatasetError::Size("need at least two classes".into()));
    }
    if per_class == 0 || dim == 0 {
        return Err(DatasetError::Size("per_class and dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            dir.iter().map(|v| 0.5 + separation * v / norm).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(classes * per_class * dim);
    let mut labels = Vec::with_capacity(classes * per_class);
    for _ in 0..per_class {
        for (c, centre) in centres.iter().enumerate() {
            values.extend(centre.iter().map(|&m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (m + SYNTH_SIGMA * z).clamp(0.0, 1.0)
            }));
            labels.push(c);
        }
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng);
    let ds = Dataset {
        features: Array2::from_shape_vec((labels.len(), dim), values).expect("shape"),
        labels,
        class_names: (0..classes).map(|c| format!("class{c}")).collect(),
        provenance: Provenance::Synthetic,
    };
    Ok(ds.select(&order))
}
