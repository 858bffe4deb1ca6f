//! A dense autoencoder that squeezes normalized filters through a single
//! sigmoid code unit, and sampling of candidate filters from that code.
//!
//! Default layout for `k = 7`:
//!
//! ```text
//! encoder  49 -> 64 -> 32 -> 16 -> 8   leaky ReLU
//!           8 -> 1                     sigmoid (the code)
//! decoder   1 -> 8 -> 16 -> 32 -> 64   leaky ReLU
//!          64 -> 49                    tanh
//! ```
//!
//! Training is plain mini-batch gradient descent with hand-written
//! backpropagation. Everything random is drawn from one xoshiro256++
//! generator seeded through SplitMix64 (`seed_from_u64`), consumed in a fixed
//! order: weight initialization layer by layer, then one Fisher-Yates
//! shuffle per epoch. Weights are trained in `f64` and rounded to `f32`
//! when training ends, which is the precision the model file stores.

use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::filterbank::{Filter, FilterBank};
use crate::normalize::{normalize_filter, NormalizedFilter};

pub const MKAE_MAGIC: [u8; 4] = *b"MKAE";
pub const MKAE_VERSION: u32 = 1;
/// Negative-side slope of the leaky ReLU; fixed by the model file format.
pub const LEAKY_SLOPE: f64 = 0.01;
pub const ENCODER_WIDTHS: [usize; 4] = [64, 32, 16, 8];

// Pre-activation clamps that keep sigmoid and tanh strictly inside their
// open ranges in f64.
const SIGMOID_CLAMP: f64 = 36.0;
const TANH_CLAMP: f64 = 18.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::LeakyRelu => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => Activation::LeakyRelu,
            1 => Activation::Sigmoid,
            2 => Activation::Tanh,
            3 => Activation::Identity,
            other => return Err(Error::parse("MKAE layer", format!("activation code {other}"))),
        })
    }

    fn apply(self, x: f64, slope: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP)).exp()),
            Activation::Tanh => x.clamp(-TANH_CLAMP, TANH_CLAMP).tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64, slope: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

impl DenseLayer {
    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z = row
                .iter()
                .zip(input)
                .map(|(&w, &x)| w as f64 * x)
                .sum::<f64>()
                + self.biases[o] as f64;
            out.push(self.activation.apply(z, LEAKY_SLOPE));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderModel {
    layers: Vec<DenseLayer>,
    k: usize,
    /// Seed the model was initialized from; not persisted in the file.
    pub seed: u64,
}

fn default_layout(k: usize) -> Vec<(usize, usize, Activation)> {
    let n = k * k;
    let mut widths = vec![n];
    widths.extend(ENCODER_WIDTHS);
    widths.push(1);
    let mut layout: Vec<(usize, usize, Activation)> = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i == ENCODER_WIDTHS.len() { Activation::Sigmoid } else { Activation::LeakyRelu };
            (w[0], w[1], act)
        })
        .collect();
    let decoder_widths: Vec<usize> = widths.iter().rev().copied().collect();
    layout.extend(decoder_widths.windows(2).enumerate().map(|(i, w)| {
        let act = if i == ENCODER_WIDTHS.len() { Activation::Tanh } else { Activation::LeakyRelu };
        (w[0], w[1], act)
    }));
    layout
}

fn uniform01(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn below(rng: &mut Xoshiro256PlusPlus, bound: usize) -> usize {
    ((rng.next_u64() as u128 * bound as u128) >> 64) as usize
}

impl AutoencoderModel {
    /// Glorot-uniform weights, zero biases.
    pub fn initialize(k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k % 2 == 0 {
            return Err(Error::InvalidFilter(format!("k must be odd and positive, got {k}")));
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let layers = default_layout(k)
            .into_iter()
            .map(|(inputs, outputs, activation)| {
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| ((2.0 * uniform01(&mut rng) - 1.0) * limit) as f32)
                    .collect();
                DenseLayer {
                    inputs,
                    outputs,
                    activation,
                    weights,
                    biases: vec![0.0; outputs],
                }
            })
            .collect();
        Ok(AutoencoderModel { layers, k, seed })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let invalid = |m: String| Err(Error::parse("autoencoder layout", m));
        let Some(first) = layers.first() else {
            return invalid("no layers".into());
        };
        let k = (first.inputs as f64).sqrt().round() as usize;
        if k * k != first.inputs || k % 2 == 0 {
            return invalid(format!("input width {} is not an odd square", first.inputs));
        }
        let expected = default_layout(k);
        if layers.len() != expected.len() {
            return invalid(format!("expected {} layers, found {}", expected.len(), layers.len()));
        }
        for (i, (layer, &(inputs, outputs, act))) in layers.iter().zip(&expected).enumerate() {
            if (layer.inputs, layer.outputs, layer.activation) != (inputs, outputs, act) {
                return invalid(format!(
                    "layer {i} is {}x{} {:?}, expected {inputs}x{outputs} {act:?}",
                    layer.inputs, layer.outputs, layer.activation
                ));
            }
            if layer.weights.len() != inputs * outputs || layer.biases.len() != outputs {
                return invalid(format!("layer {i} has wrong parameter count"));
            }
            if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { index: i });
            }
        }
        Ok(AutoencoderModel { layers, k, seed: 0 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    fn code_layer(&self) -> usize {
        ENCODER_WIDTHS.len()
    }

    fn run(&self, layers: &[DenseLayer], input: &[f64]) -> Vec<f64> {
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in layers {
            layer.forward(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    fn encode_values(&self, values: &[f64]) -> f64 {
        self.run(&self.layers[..=self.code_layer()], values)[0]
    }

    fn decode_values(&self, code: f64) -> Vec<f64> {
        self.run(&self.layers[self.code_layer() + 1..], &[code])
    }

    pub fn to_mkae_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MKAE_MAGIC);
        out.extend_from_slice(&MKAE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            out.extend_from_slice(&(layer.inputs as u32).to_le_bytes());
            out.extend_from_slice(&(layer.outputs as u32).to_le_bytes());
            out.push(layer.activation.code());
            for v in layer.weights.iter().chain(&layer.biases) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_mkae_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let end = pos + n;
            let slice = bytes.get(pos..end).ok_or(Error::TruncatedFile {
                needed: end,
                found: bytes.len(),
            })?;
            pos = end;
            Ok(slice)
        };
        let u32_of = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let magic: [u8; 4] = take(4)?.try_into().expect("4 bytes");
        if magic != MKAE_MAGIC {
            return Err(Error::BadMagic {
                expected: MKAE_MAGIC,
                found: magic,
            });
        }
        let version = u32_of(take(4)?);
        if version != MKAE_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let count = u32_of(take(4)?) as usize;
        if count > 64 {
            return Err(Error::parse("MKAE header", format!("{count} layers")));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let inputs = u32_of(take(4)?) as usize;
            let outputs = u32_of(take(4)?) as usize;
            let activation = Activation::from_code(take(1)?[0])?;
            let params = inputs
                .checked_mul(outputs)
                .filter(|&p| p <= 1 << 24)
                .ok_or_else(|| Error::parse("MKAE layer", "layer too large"))?;
            let read_f32s = |s: &[u8]| -> Vec<f32> {
                s.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect()
            };
            let weights = read_f32s(take(4 * params)?);
            let biases = read_f32s(take(4 * outputs)?);
            layers.push(DenseLayer {
                inputs,
                outputs,
                activation,
                weights,
                biases,
            });
        }
        if pos != bytes.len() {
            return Err(Error::parse("MKAE payload", format!("{} trailing bytes", bytes.len() - pos)));
        }
        AutoencoderModel::from_layers(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_mkae_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        AutoencoderModel::from_mkae_bytes(&bytes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    /// Heavy-ball momentum.
    Momentum { momentum: f64 },
    /// Adam with bias correction.
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 42,
            optimizer: Optimizer::Adam {
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epochs and batch size must be at least 1 and the learning rate positive (got {}, {}, {})",
                self.epochs, self.batch_size, self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: AutoencoderModel,
    /// Mean squared reconstruction error per epoch, accumulated over the
    /// epoch's batches before each update.
    pub loss_history: Vec<f64>,
}

struct Trainer {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    shapes: Vec<(usize, usize, Activation)>,
    // Optimizer state: first and second moments (momentum uses the first).
    m_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    steps: u64,
}

impl Trainer {
    fn from_model(model: &AutoencoderModel) -> Self {
        let weights: Vec<Vec<f64>> = model
            .layers
            .iter()
            .map(|l| l.weights.iter().map(|&w| w as f64).collect())
            .collect();
        let biases: Vec<Vec<f64>> = model
            .layers
            .iter()
            .map(|l| l.biases.iter().map(|&b| b as f64).collect())
            .collect();
        let zeros_like = |v: &Vec<Vec<f64>>| v.iter().map(|x| vec![0.0; x.len()]).collect::<Vec<_>>();
        Trainer {
            m_w: zeros_like(&weights),
            m_b: zeros_like(&biases),
            v_w: zeros_like(&weights),
            v_b: zeros_like(&biases),
            shapes: model.layers.iter().map(|l| (l.inputs, l.outputs, l.activation)).collect(),
            weights,
            biases,
            steps: 0,
        }
    }

    /// Forward pass keeping pre-activations and outputs of every layer.
    fn forward(&self, input: &[f64], pre: &mut [Vec<f64>], post: &mut [Vec<f64>]) {
        for (l, &(inputs, outputs, act)) in self.shapes.iter().enumerate() {
            let (w, b) = (&self.weights[l], &self.biases[l]);
            let x: &[f64] = if l == 0 { input } else { &post[l - 1] };
            let mut z = Vec::with_capacity(outputs);
            for o in 0..outputs {
                let row = &w[o * inputs..(o + 1) * inputs];
                z.push(row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b[o]);
            }
            post[l] = z.iter().map(|&v| act.apply(v, LEAKY_SLOPE)).collect();
            pre[l] = z;
        }
    }

    /// Returns the summed squared error of the batch and accumulates
    /// gradients of the batch-mean MSE.
    fn batch_gradients(
        &self,
        batch: &[&[f64]],
        grad_w: &mut [Vec<f64>],
        grad_b: &mut [Vec<f64>],
    ) -> f64 {
        let layers = self.shapes.len();
        let n_out = self.shapes[layers - 1].1;
        let scale = 2.0 / (batch.len() * n_out) as f64;
        let mut pre = vec![Vec::new(); layers];
        let mut post = vec![Vec::new(); layers];
        let mut sse = 0.0;
        for g in grad_w.iter_mut().chain(grad_b.iter_mut()) {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for &sample in batch {
            self.forward(sample, &mut pre, &mut post);
            let mut delta: Vec<f64> = post[layers - 1]
                .iter()
                .zip(sample)
                .map(|(y, t)| {
                    sse += (y - t) * (y - t);
                    scale * (y - t)
                })
                .collect();
            for l in (0..layers).rev() {
                let (inputs, outputs, act) = self.shapes[l];
                for o in 0..outputs {
                    delta[o] *= act.derivative(pre[l][o], post[l][o], LEAKY_SLOPE);
                }
                let x: &[f64] = if l == 0 { sample } else { &post[l - 1] };
                for o in 0..outputs {
                    let d = delta[o];
                    grad_b[l][o] += d;
                    let row = &mut grad_w[l][o * inputs..(o + 1) * inputs];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
                if l > 0 {
                    let w = &self.weights[l];
                    let mut prev = vec![0.0; inputs];
                    for o in 0..outputs {
                        let d = delta[o];
                        for (p, &wv) in prev.iter_mut().zip(&w[o * inputs..(o + 1) * inputs]) {
                            *p += d * wv;
                        }
                    }
                    delta = prev;
                }
            }
        }
        sse
    }

    fn step(&mut self, config: &TrainConfig, grad_w: &[Vec<f64>], grad_b: &[Vec<f64>]) {
        self.steps += 1;
        let lr = config.learning_rate;
        let t = self.steps as i32;
        let update = |param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| match config.optimizer {
            Optimizer::Momentum { momentum } => {
                for ((p, &g), m) in param.iter_mut().zip(grad).zip(m.iter_mut()) {
                    *m = momentum * *m + g;
                    *p -= lr * *m;
                }
            }
            Optimizer::Adam { beta1, beta2, epsilon } => {
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                }
            }
        };
        for l in 0..self.shapes.len() {
            update(&mut self.weights[l], &grad_w[l], &mut self.m_w[l], &mut self.v_w[l]);
            update(&mut self.biases[l], &grad_b[l], &mut self.m_b[l], &mut self.v_b[l]);
        }
    }

    fn into_model(self, k: usize, seed: u64) -> AutoencoderModel {
        let layers = self
            .shapes
            .iter()
            .enumerate()
            .map(|(l, &(inputs, outputs, activation))| DenseLayer {
                inputs,
                outputs,
                activation,
                weights: self.weights[l].iter().map(|&w| w as f32).collect(),
                biases: self.biases[l].iter().map(|&b| b as f32).collect(),
            })
            .collect();
        AutoencoderModel { layers, k, seed }
    }
}

pub fn train_autoencoder(filters: &[NormalizedFilter], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let first = filters.first().ok_or(Error::EmptyTrainingSet)?;
    let k = first.k();
    if let Some(f) = filters.iter().find(|f| f.k() != k) {
        return Err(Error::KMismatch {
            expected: k,
            found: f.k(),
        });
    }
    let initial = AutoencoderModel::initialize(k, config.seed)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    // Skip past the draws consumed by initialization so the shuffle stream
    // does not replay the weights.
    let init_draws: usize = initial.layers.iter().map(|l| l.weights.len()).sum();
    for _ in 0..init_draws {
        rng.next_u64();
    }
    let mut trainer = Trainer::from_model(&initial);
    let mut grad_w: Vec<Vec<f64>> = trainer.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut grad_b: Vec<Vec<f64>> = trainer.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut order: Vec<usize> = (0..filters.len()).collect();
    let n_values = (k * k) as f64;
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = below(&mut rng, i + 1);
            order.swap(i, j);
        }
        let mut sse = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| filters[i].values()).collect();
            sse += trainer.batch_gradients(&batch, &mut grad_w, &mut grad_b);
            trainer.step(config, &grad_w, &grad_b);
        }
        loss_history.push(sse / (filters.len() as f64 * n_values));
    }
    Ok(TrainOutcome {
        model: trainer.into_model(k, config.seed),
        loss_history,
    })
}

fn check_k(model: &AutoencoderModel, k: usize) -> Result<()> {
    if model.k != k {
        return Err(Error::KMismatch {
            expected: model.k,
            found: k,
        });
    }
    Ok(())
}

/// Code of a normalized filter, strictly inside (0, 1).
pub fn encode(model: &AutoencoderModel, filter: &NormalizedFilter) -> Result<f64> {
    check_k(model, filter.k())?;
    Ok(model.encode_values(filter.values()))
}

/// Normalizes `filter` first.
pub fn encode_filter(model: &AutoencoderModel, filter: &Filter) -> Result<f64> {
    encode(model, &normalize_filter(filter)?)
}

pub fn decode(model: &AutoencoderModel, code: f64) -> Result<Filter> {
    if !(0.0..=1.0).contains(&code) {
        return Err(Error::CodeOutOfRange(code));
    }
    Filter::new(model.k, model.decode_values(code))
}

/// Mean squared reconstruction error of `filters` under `model`.
pub fn reconstruction_mse(model: &AutoencoderModel, filters: &[NormalizedFilter]) -> Result<f64> {
    if filters.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut sse = 0.0;
    for f in filters {
        let code = encode(model, f)?;
        let out = model.decode_values(code);
        sse += out.iter().zip(f.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(sse / (filters.len() * model.k * model.k) as f64)
}

/// `i / (n - 1)` for `i = 0..n`.
pub fn uniform_codes(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

/// Codes `c ± delta, c ± 2 delta, …` (`per_center` per center, ascending),
/// clamped to `[0, 1]`, first occurrence kept on duplicates.
pub fn around_codes(centers: &[f64], per_center: usize, delta: f64) -> Result<Vec<f64>> {
    if per_center % 2 != 0 {
        return Err(Error::InvalidArgument(format!("per_center must be even, got {per_center}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let half = (per_center / 2) as i64;
    let mut codes: Vec<f64> = Vec::new();
    for &c in centers {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::CodeOutOfRange(c));
        }
        for step in (-half..=half).filter(|&s| s != 0) {
            let code = (c + step as f64 * delta).clamp(0.0, 1.0);
            if !codes.contains(&code) {
                codes.push(code);
            }
        }
    }
    Ok(codes)
}

fn decode_codes(model: &AutoencoderModel, codes: &[f64]) -> Result<FilterBank> {
    let filters = codes.iter().map(|&c| decode(model, c)).collect::<Result<Vec<_>>>()?;
    FilterBank::from_filters(model.k, filters)
}

/// `n` candidates decoded from evenly spaced codes covering `[0, 1]`.
pub fn sample_uniform(model: &AutoencoderModel, n: usize) -> Result<FilterBank> {
    decode_codes(model, &uniform_codes(n)?)
}

/// Candidates decoded from [`around_codes`].
pub fn sample_around(model: &AutoencoderModel, centers: &[f64], per_center: usize, delta: f64) -> Result<FilterBank> {
    decode_codes(model, &around_codes(centers, per_center, delta)?)
}

/// Half a cell of an `n`-point uniform grid.
pub fn default_delta(n: usize) -> f64 {
    1.0 / (2.0 * (n.max(2) - 1) as f64)
}
