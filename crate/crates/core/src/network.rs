//! Dense tanh classifier head evolved as a flat parameter vector, plus an
//! optional frozen convolution/pooling feature extractor.
//!
//! Parameter layout for a head with `L` hidden layers of width `h`:
//!
//! ```text
//! [W1 (n_in x h, row-major), b1, W2 (h x h), b2, ..., WL, bL, M (h x n_out)]
//! ```
//!
//! With one hidden layer this is `n·h + h + h·m` values. The output layer has
//! no bias.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{Bounds, Objective, OptimizeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parameter vector has length {got}, network expects {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid network: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n_in: usize,
    pub n_hidden: usize,
    /// Number of stacked hidden layers, all `n_hidden` wide.
    #[serde(default = "one")]
    pub n_layers: usize,
    pub n_out: usize,
}

fn one() -> usize {
    1
}

impl NetworkSpec {
    /// Single hidden layer.
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize) -> Self {
        NetworkSpec {
            n_in,
            n_hidden,
            n_layers: 1,
            n_out,
        }
    }

    pub fn with_layers(mut self, n_layers: usize) -> Self {
        self.n_layers = n_layers;
        self
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.n_in == 0 || self.n_hidden == 0 || self.n_out == 0 || self.n_layers == 0 {
            return Err(NetworkError::Invalid(format!(
                "all layer sizes must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Length of the flat parameter vector.
    pub fn param_length(&self) -> usize {
        let h = self.n_hidden;
        self.n_in * h + h + (self.n_layers - 1) * (h * h + h) + h * self.n_out
    }

    pub fn check_params(&self, params: &[f64]) -> Result<(), NetworkError> {
        let expected = self.param_length();
        if params.len() != expected {
            return Err(NetworkError::ParamLength {
                expected,
                got: params.len(),
            });
        }
        Ok(())
    }
}

/// Flat parameter vector length for `spec`.
pub fn encode(spec: &NetworkSpec) -> usize {
    spec.param_length()
}

/// A parameter vector known to match its network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self, NetworkError> {
        spec.check_params(&values)?;
        Ok(ParamVector { values })
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        ParamVector {
            values: vec![0.0; spec.param_length()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One value per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        for v in &self.values {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(spec: &NetworkSpec, text: &str) -> Result<Self, NetworkError> {
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.parse::<f64>()
                    .map_err(|e| NetworkError::Shape(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(spec, values)
    }
}

/// Forward pass reusing two scratch buffers; writes the output into `out`.
fn forward_into(
    spec: &NetworkSpec,
    params: &[f64],
    input: ArrayView1<f64>,
    hidden: &mut Vec<f64>,
    next: &mut Vec<f64>,
    out: &mut [f64],
) {
    let h = spec.n_hidden;
    let mut offset = 0;

    // First hidden layer.
    let weights = &params[offset..offset + spec.n_in * h];
    offset += spec.n_in * h;
    hidden.clear();
    hidden.extend_from_slice(&params[offset..offset + h]);
    offset += h;
    for (i, &x) in input.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let row = &weights[i * h..(i + 1) * h];
        for (acc, &w) in hidden.iter_mut().zip(row) {
            *acc += x * w;
        }
    }
    hidden.iter_mut().for_each(|v| *v = v.tanh());

    for _ in 1..spec.n_layers {
        let weights = &params[offset..offset + h * h];
        offset += h * h;
        next.clear();
        next.extend_from_slice(&params[offset..offset + h]);
        offset += h;
        for (i, &x) in hidden.iter().enumerate() {
            let row = &weights[i * h..(i + 1) * h];
            for (acc, &w) in next.iter_mut().zip(row) {
                *acc += x * w;
            }
        }
        next.iter_mut().for_each(|v| *v = v.tanh());
        std::mem::swap(hidden, next);
    }

    let m = spec.n_out;
    let weights = &params[offset..offset + h * m];
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &x) in hidden.iter().enumerate() {
        let row = &weights[j * m..(j + 1) * m];
        for (acc, &w) in out.iter_mut().zip(row) {
            *acc += x * w;
        }
    }
    out.iter_mut().for_each(|v| *v = v.tanh());
}

/// Output vector of the network for one input.
pub fn decode_forward(
    spec: &NetworkSpec,
    params: &[f64],
    input: &[f64],
) -> Result<Vec<f64>, NetworkError> {
    spec.check_params(params)?;
    if input.len() != spec.n_in {
        return Err(NetworkError::Shape(format!(
            "input has {} features, network expects {}",
            input.len(),
            spec.n_in
        )));
    }
    let mut out = vec![0.0; spec.n_out];
    forward_into(
        spec,
        params,
        ArrayView1::from(input),
        &mut Vec::with_capacity(spec.n_hidden),
        &mut Vec::with_capacity(spec.n_hidden),
        &mut out,
    );
    Ok(out)
}

/// Outputs for every row of `inputs`.
pub fn forward_batch(
    spec: &NetworkSpec,
    params: &[f64],
    inputs: ArrayView2<f64>,
) -> Result<Array2<f64>, NetworkError> {
    spec.check_params(params)?;
    if inputs.ncols() != spec.n_in {
        return Err(NetworkError::Shape(format!(
            "inputs have {} columns, network expects {}",
            inputs.ncols(),
            spec.n_in
        )));
    }
    let mut outputs = Array2::zeros((inputs.nrows(), spec.n_out));
    let mut hidden = Vec::with_capacity(spec.n_hidden);
    let mut next = Vec::with_capacity(spec.n_hidden);
    let mut buf = vec![0.0; spec.n_out];
    for (row, mut out_row) in inputs.rows().into_iter().zip(outputs.rows_mut()) {
        forward_into(spec, params, row, &mut hidden, &mut next, &mut buf);
        out_row.iter_mut().zip(&buf).for_each(|(o, &v)| *o = v);
    }
    Ok(outputs)
}

/// `½·sqrt(Σ‖o − d‖² / N)` over `N` samples.
pub fn loss(outputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64, NetworkError> {
    if outputs.dim() != targets.dim() {
        return Err(NetworkError::Shape(format!(
            "outputs {:?} vs targets {:?}",
            outputs.dim(),
            targets.dim()
        )));
    }
    let n = outputs.nrows();
    if n == 0 {
        return Err(NetworkError::EmptyBatch);
    }
    let sum: f64 = outputs
        .iter()
        .zip(targets.iter())
        .map(|(o, d)| (o - d) * (o - d))
        .sum();
    Ok(0.5 * (sum / n as f64).sqrt())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Percentage of rows whose argmax matches the label.
pub fn classification_rate(outputs: ArrayView2<f64>, labels: &[usize]) -> Result<f64, NetworkError> {
    if outputs.nrows() != labels.len() {
        return Err(NetworkError::Shape(format!(
            "{} outputs vs {} labels",
            outputs.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(NetworkError::EmptyBatch);
    }
    let correct = outputs
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &label)| argmax(*row) == label)
        .count();
    Ok(100.0 * correct as f64 / labels.len() as f64)
}

/// `±1` target matrix with `+1` in each row's label column.
pub fn one_hot_targets(labels: &[usize], classes: usize) -> Array2<f64> {
    let mut t = Array2::from_elem((labels.len(), classes), -1.0);
    for (i, &l) in labels.iter().enumerate() {
        t[[i, l]] = 1.0;
    }
    t
}

/// Inputs with their `±1` targets and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub labels: Vec<usize>,
}

impl LabeledBatch {
    pub fn new(inputs: Array2<f64>, labels: Vec<usize>, classes: usize) -> Result<Self, NetworkError> {
        if inputs.nrows() != labels.len() {
            return Err(NetworkError::Shape(format!(
                "{} rows vs {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(NetworkError::Shape(format!("label {bad} outside {classes} classes")));
        }
        Ok(LabeledBatch {
            targets: one_hot_targets(&labels, classes),
            inputs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// The training loss of a network as a box-bounded objective.
///
/// With more than one mini-batch, each iteration evaluates on a single
/// contiguous slice of the batch, rotating through slices by iteration.
pub struct NetworkObjective {
    spec: NetworkSpec,
    batch: LabeledBatch,
    bounds: Bounds,
    slices: Vec<Range<usize>>,
    active: AtomicUsize,
}

impl NetworkObjective {
    pub fn new(spec: NetworkSpec, batch: LabeledBatch, weight_bound: f64) -> Result<Self, NetworkError> {
        Self::with_batches(spec, batch, weight_bound, 1)
    }

    pub fn with_batches(
        spec: NetworkSpec,
        batch: LabeledBatch,
        weight_bound: f64,
        n_batches: usize,
    ) -> Result<Self, NetworkError> {
        spec.validate()?;
        if batch.is_empty() {
            return Err(NetworkError::EmptyBatch);
        }
        if batch.inputs.ncols() != spec.n_in || batch.targets.ncols() != spec.n_out {
            return Err(NetworkError::Shape(format!(
                "batch is {}→{}, network is {}→{}",
                batch.inputs.ncols(),
                batch.targets.ncols(),
                spec.n_in,
                spec.n_out
            )));
        }
        if !(weight_bound > 0.0 && weight_bound.is_finite()) {
            return Err(NetworkError::Invalid(format!("weight bound {weight_bound}")));
        }
        if n_batches == 0 || n_batches > batch.len() {
            return Err(NetworkError::Invalid(format!(
                "cannot split {} samples into {n_batches} batches",
                batch.len()
            )));
        }
        let bounds = Bounds::uniform(spec.param_length(), -weight_bound, weight_bound)
            .map_err(|e: OptimizeError| NetworkError::Invalid(e.to_string()))?;
        let n = batch.len();
        let slices = (0..n_batches)
            .map(|k| (k * n / n_batches)..((k + 1) * n / n_batches))
            .collect();
        Ok(NetworkObjective {
            spec,
            batch,
            bounds,
            slices,
            active: AtomicUsize::new(0),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn batch(&self) -> &LabeledBatch {
        &self.batch
    }

    fn loss_on(&self, params: &[f64], rows: Range<usize>) -> f64 {
        let spec = &self.spec;
        let mut hidden = Vec::with_capacity(spec.n_hidden);
        let mut next = Vec::with_capacity(spec.n_hidden);
        let mut out = vec![0.0; spec.n_out];
        let mut sum = 0.0;
        let count = rows.len();
        for r in rows {
            forward_into(spec, params, self.batch.inputs.row(r), &mut hidden, &mut next, &mut out);
            for (o, d) in out.iter().zip(self.batch.targets.row(r)) {
                sum += (o - d) * (o - d);
            }
        }
        0.5 * (sum / count as f64).sqrt()
    }

    /// Loss over every sample, independent of the active mini-batch.
    pub fn full_loss(&self, params: &[f64]) -> f64 {
        self.loss_on(params, 0..self.batch.len())
    }
}

impl Objective for NetworkObjective {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        let k = self.active.load(Ordering::Relaxed);
        self.loss_on(position, self.slices[k].clone())
    }

    fn begin_iteration(&self, iteration: usize) {
        self.active.store(iteration % self.slices.len(), Ordering::Relaxed);
    }
}

/// Network objective over a training batch with `[-weight_bound, weight_bound]` boxes.
pub fn make_objective(
    spec: NetworkSpec,
    train: LabeledBatch,
    weight_bound: f64,
) -> Result<NetworkObjective, NetworkError> {
    NetworkObjective::new(spec, train, weight_bound)
}

/// Valid-mode convolution of `image` with each filter, followed by `tanh(· + bias)`.
pub fn conv_forward(
    image: ArrayView2<f64>,
    filters: &[Array2<f64>],
    biases: &[f64],
) -> Result<Vec<Array2<f64>>, NetworkError> {
    if filters.len() != biases.len() {
        return Err(NetworkError::Shape(format!(
            "{} filters vs {} biases",
            filters.len(),
            biases.len()
        )));
    }
    filters
        .iter()
        .zip(biases)
        .map(|(filter, &bias)| {
            let (kh, kw) = filter.dim();
            let (ih, iw) = image.dim();
            if ih < kh || iw < kw {
                return Err(NetworkError::Shape(format!(
                    "image {ih}x{iw} smaller than kernel {kh}x{kw}"
                )));
            }
            let (oh, ow) = (ih - kh + 1, iw - kw + 1);
            Ok(Array2::from_shape_fn((oh, ow), |(i, j)| {
                let mut acc = bias;
                for a in 0..kh {
                    for b in 0..kw {
                        acc += filter[[a, b]] * image[[i + a, j + b]];
                    }
                }
                acc.tanh()
            }))
        })
        .collect()
}

/// 2x2 sum pooling with `tanh(beta·Σ + bias)`; odd sizes are edge-padded first.
pub fn pool_forward(fm: ArrayView2<f64>, beta: f64, bias: f64) -> Array2<f64> {
    let (h, w) = fm.dim();
    let at = |i: usize, j: usize| fm[[i.min(h - 1), j.min(w - 1)]];
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    Array2::from_shape_fn((oh, ow), |(i, j)| {
        let s = at(2 * i, 2 * j) + at(2 * i, 2 * j + 1) + at(2 * i + 1, 2 * j) + at(2 * i + 1, 2 * j + 1);
        (beta * s + bias).tanh()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvSpec {
    /// Input images are `image_side x image_side`, stored row-major in the feature vector.
    pub image_side: usize,
    pub n_maps: usize,
    #[serde(default = "default_kernel")]
    pub kernel_size: usize,
    pub seed: u64,
}

fn default_kernel() -> usize {
    5
}

/// Frozen random convolution + pooling layer used as a fixed feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvExtractor {
    pub spec: ConvSpec,
    filters: Vec<Array2<f64>>,
    biases: Vec<f64>,
}

impl ConvExtractor {
    pub fn frozen(spec: ConvSpec) -> Result<Self, NetworkError> {
        if spec.n_maps == 0 || spec.kernel_size == 0 || spec.image_side < spec.kernel_size {
            return Err(NetworkError::Invalid(format!("bad convolution layer {spec:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let k = spec.kernel_size;
        let scale = 1.0 / k as f64;
        let filters = (0..spec.n_maps)
            .map(|_| Array2::from_shape_fn((k, k), |_| scale * rng.random_range(-1.0..1.0)))
            .collect();
        let biases = (0..spec.n_maps).map(|_| 0.1 * rng.random_range(-1.0..1.0)).collect();
        Ok(ConvExtractor { spec, filters, biases })
    }

    /// Number of features produced per image.
    pub fn output_len(&self) -> usize {
        let side = (self.spec.image_side - self.spec.kernel_size + 1).div_ceil(2);
        self.spec.n_maps * side * side
    }

    pub fn extract(&self, features: &[f64]) -> Result<Vec<f64>, NetworkError> {
        let side = self.spec.image_side;
        if features.len() != side * side {
            return Err(NetworkError::Shape(format!(
                "{} features cannot form a {side}x{side} image",
                features.len()
            )));
        }
        let image = ArrayView2::from_shape((side, side), features)
            .map_err(|e| NetworkError::Shape(e.to_string()))?;
        let maps = conv_forward(image, &self.filters, &self.biases)?;
        Ok(maps
            .iter()
            .flat_map(|m| pool_forward(m.view(), 1.0, 0.0).into_iter())
            .collect())
    }

    pub fn extract_all(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>, NetworkError> {
        let mut out = Array2::zeros((inputs.nrows(), self.output_len()));
        for (row, mut dst) in inputs.rows().into_iter().zip(out.rows_mut()) {
            let v = self.extract(&row.to_vec())?;
            dst.iter_mut().zip(v).for_each(|(d, s)| *d = s);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn param_length_examples() {
        assert_eq!(encode(&NetworkSpec::new(1, 1, 1)), 3);
        assert_eq!(encode(&NetworkSpec::new(60, 10, 2)), 630);
        assert_eq!(encode(&NetworkSpec::new(2, 3, 2)), 15);
        // Extra hidden layers add h·h + h each.
        assert_eq!(encode(&NetworkSpec::new(60, 10, 2).with_layers(3)), 630 + 2 * 110);
    }

    #[test]
    fn forward_examples() {
        let s = NetworkSpec::new(1, 1, 1);
        assert_eq!(decode_forward(&s, &[0.0, 0.0, 1.0], &[5.0]).unwrap(), vec![0.0]);
        let o = decode_forward(&s, &[1.0, 0.0, 1.0], &[1.0]).unwrap();
        assert!((o[0] - 1f64.tanh().tanh()).abs() < 1e-15);
        assert!((o[0] - 0.6420).abs() < 1e-4);

        let s = NetworkSpec::new(3, 4, 2);
        let zeros = ParamVector::zeros(&s);
        assert_eq!(decode_forward(&s, zeros.values(), &[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_layout_by_hand() {
        // n=2, h=2, m=1: W row-major [[w11, w12], [w21, w22]], b, M.
        let s = NetworkSpec::new(2, 2, 1);
        let p = [0.1, 0.2, 0.3, 0.4, 0.05, -0.05, 1.5, -0.5];
        let x = [1.0, 2.0];
        let h1 = (0.1 * 1.0 + 0.3 * 2.0 + 0.05f64).tanh();
        let h2 = (0.2 * 1.0 + 0.4 * 2.0 - 0.05f64).tanh();
        let expected = (1.5 * h1 - 0.5 * h2).tanh();
        let o = decode_forward(&s, &p, &x).unwrap();
        assert!((o[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn stacked_layers_by_hand() {
        let s = NetworkSpec::new(1, 1, 1).with_layers(2);
        // W1, b1, W2, b2, M
        let p = [0.5, 0.1, -2.0, 0.3, 1.2];
        let h1 = (0.5 * 0.8 + 0.1f64).tanh();
        let h2 = (-2.0 * h1 + 0.3f64).tanh();
        let o = decode_forward(&s, &p, &[0.8]).unwrap();
        assert!((o[0] - (1.2 * h2).tanh()).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_lengths() {
        let s = NetworkSpec::new(2, 3, 2);
        assert!(matches!(
            decode_forward(&s, &[0.0; 14], &[0.0, 0.0]),
            Err(NetworkError::ParamLength { expected: 15, got: 14 })
        ));
        assert!(decode_forward(&s, &[0.0; 15], &[0.0]).is_err());
        assert!(ParamVector::new(&s, vec![0.0; 16]).is_err());
    }

    #[test]
    fn loss_examples() {
        let o = array![[1.0], [0.0]];
        assert_eq!(loss(o.view(), o.view()).unwrap(), 0.0);
        let o = Array2::<f64>::zeros((4, 1));
        let d = Array2::<f64>::ones((4, 1));
        assert_eq!(loss(o.view(), d.view()).unwrap(), 0.5);
        assert_eq!(loss(array![[3.0]].view(), array![[1.0]].view()).unwrap(), 1.0);
        let empty = Array2::<f64>::zeros((0, 1));
        assert_eq!(loss(empty.view(), empty.view()), Err(NetworkError::EmptyBatch));
        assert!(loss(array![[1.0, 2.0]].view(), array![[1.0]].view()).is_err());
    }

    #[test]
    fn classification_examples() {
        let o = array![[0.9, -0.9], [-0.2, 0.3], [0.0, 0.0], [0.5, 0.1]];
        assert_eq!(classification_rate(o.view(), &[0, 1, 0, 0]).unwrap(), 100.0);
        // Row 2 ties and resolves to class 0.
        assert_eq!(classification_rate(o.view(), &[0, 1, 1, 1]).unwrap(), 50.0);
    }

    #[test]
    fn zero_params_balanced_objective() {
        let inputs = array![[0.1], [0.9], [0.4], [0.7]];
        let batch = LabeledBatch::new(inputs, vec![0, 0, 0, 0], 1).unwrap();
        let mut batch = batch;
        batch.targets = array![[1.0], [-1.0], [1.0], [-1.0]];
        let s = NetworkSpec::new(1, 3, 1);
        let obj = make_objective(s, batch, 10.0).unwrap();
        assert_eq!(obj.dim(), encode(&s));
        let zero = vec![0.0; obj.dim()];
        assert_eq!(obj.evaluate(&zero), 0.5);
        let p: Vec<f64> = (0..obj.dim()).map(|i| i as f64 * 0.1 - 0.3).collect();
        assert_eq!(obj.evaluate(&p), obj.evaluate(&p));
        assert_eq!(obj.bounds().upper()[0], 10.0);
        assert_eq!(obj.bounds().lower()[0], -10.0);
    }

    #[test]
    fn objective_matches_batch_loss() {
        let inputs = array![[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]];
        let batch = LabeledBatch::new(inputs.clone(), vec![0, 1, 1], 2).unwrap();
        let s = NetworkSpec::new(2, 3, 2);
        let p: Vec<f64> = (0..s.param_length()).map(|i| ((i * 7) % 5) as f64 * 0.3 - 0.6).collect();
        let out = forward_batch(&s, &p, inputs.view()).unwrap();
        let expected = loss(out.view(), batch.targets.view()).unwrap();
        let obj = make_objective(s, batch, 5.0).unwrap();
        assert!((obj.evaluate(&p) - expected).abs() < 1e-15);
    }

    #[test]
    fn minibatches_rotate() {
        let inputs = array![[0.0], [1.0], [2.0], [3.0]];
        let batch = LabeledBatch::new(inputs, vec![0, 1, 0, 1], 2).unwrap();
        let s = NetworkSpec::new(1, 2, 2);
        let obj = NetworkObjective::with_batches(s, batch, 3.0, 2).unwrap();
        let p: Vec<f64> = (0..s.param_length()).map(|i| i as f64 * 0.2 - 0.5).collect();
        obj.begin_iteration(0);
        let a = obj.evaluate(&p);
        obj.begin_iteration(1);
        let b = obj.evaluate(&p);
        obj.begin_iteration(2);
        assert_eq!(obj.evaluate(&p), a);
        assert_ne!(a, b);
        let full = obj.full_loss(&p);
        // Equal-size halves: full sum of squares is the mean of the halves'.
        assert!((4.0 * full * full - 0.5 * (4.0 * a * a + 4.0 * b * b)).abs() < 1e-12);
        let batch = LabeledBatch::new(array![[0.0]], vec![0], 1).unwrap();
        assert!(NetworkObjective::with_batches(NetworkSpec::new(1, 1, 1), batch, 1.0, 2).is_err());
    }

    #[test]
    fn conv_examples() {
        let image = Array2::<f64>::zeros((6, 6));
        let filters = vec![Array2::from_elem((5, 5), 0.3)];
        let maps = conv_forward(image.view(), &filters, &[0.0]).unwrap();
        assert_eq!(maps[0].dim(), (2, 2));
        assert!(maps[0].iter().all(|&v| v == 0.0));

        let image = Array2::from_elem((7, 7), 0.8);
        let maps = conv_forward(image.view(), &[Array2::zeros((5, 5))], &[0.4]).unwrap();
        assert!(maps[0].iter().all(|&v| v == 0.4f64.tanh()));

        let small = Array2::<f64>::zeros((4, 6));
        assert!(conv_forward(small.view(), &filters, &[0.0]).is_err());
    }

    #[test]
    fn pool_examples() {
        let z = Array2::<f64>::zeros((12, 12));
        let p = pool_forward(z.view(), 1.0, 0.0);
        assert_eq!(p.dim(), (6, 6));
        assert!(p.iter().all(|&v| v == 0.0));

        let q = pool_forward(Array2::from_elem((2, 2), 0.25).view(), 1.0, 0.0);
        assert!((q[[0, 0]] - 1f64.tanh()).abs() < 1e-15);
        assert!((q[[0, 0]] - 0.7616).abs() < 1e-4);

        // Odd sizes replicate the last row and column.
        let odd = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]];
        let p = pool_forward(odd.view(), 0.01, 0.0);
        assert_eq!(p.dim(), (2, 2));
        assert!((p[[1, 1]] - (0.01f64 * 36.0).tanh()).abs() < 1e-15);
        assert!((p[[0, 1]] - (0.01f64 * (3.0 + 3.0 + 6.0 + 6.0)).tanh()).abs() < 1e-15);
    }

    #[test]
    fn frozen_extractor_is_deterministic() {
        let spec = ConvSpec {
            image_side: 16,
            n_maps: 3,
            kernel_size: 5,
            seed: 21,
        };
        let a = ConvExtractor::frozen(spec).unwrap();
        let b = ConvExtractor::frozen(spec).unwrap();
        let img: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin()).collect();
        let fa = a.extract(&img).unwrap();
        assert_eq!(fa, b.extract(&img).unwrap());
        assert_eq!(fa.len(), a.output_len());
        assert_eq!(a.output_len(), 3 * 6 * 6);
        assert!(a.extract(&img[..255]).is_err());
    }

    #[test]
    fn param_csv_roundtrip() {
        let s = NetworkSpec::new(2, 2, 1);
        let p = ParamVector::new(&s, vec![0.1, -2.5, 3.0, 1e-300, 7.0, 0.0, -0.0, 9.75]).unwrap();
        assert_eq!(ParamVector::from_csv(&s, &p.to_csv()).unwrap(), p);
        assert!(ParamVector::from_csv(&s, "1\n2\n").is_err());
        assert!(ParamVector::from_csv(&s, "x\n").is_err());
    }

    proptest! {
        #[test]
        fn outputs_in_open_unit_interval(
            params in prop::collection::vec(-3.0f64..3.0, 15),
            input in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let s = NetworkSpec::new(2, 3, 2);
            for o in decode_forward(&s, &params, &input).unwrap() {
                prop_assert!(o > -1.0 && o < 1.0);
            }
        }

        #[test]
        fn loss_non_negative(values in prop::collection::vec(-5.0f64..5.0, 2..40)) {
            let n = values.len() / 2;
            let o = Array2::from_shape_vec((n, 1), values[..n].to_vec()).unwrap();
            let d = Array2::from_shape_vec((n, 1), values[n..2 * n].to_vec()).unwrap();
            prop_assert!(loss(o.view(), d.view()).unwrap() >= 0.0);
        }
    }
}
