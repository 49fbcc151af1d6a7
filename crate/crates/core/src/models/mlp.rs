//! A small fully connected network with hand-written backpropagation.
//!
//! ReLU hidden layers, softmax output, label-smoothed cross-entropy, Adam.
//! Every accumulation runs in a fixed order so training is bit-reproducible.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, TrainingSpec};
use crate::seed::{mix_seed, rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out × n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn he_uniform(n_in: usize, n_out: usize, bias: f64, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / n_in as f64).sqrt();
        Self {
            n_in,
            n_out,
            weights: (0..n_in * n_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect(),
            bias: vec![bias; n_out],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Smoothed one-hot target: `(1 − ε)` on the label plus `ε / K` everywhere.
pub fn smoothed_target(label: usize, n_classes: usize, smoothing: f64) -> Vec<f64> {
    let mut q = vec![smoothing / n_classes as f64; n_classes];
    q[label] += 1.0 - smoothing;
    q
}

pub const HIDDEN_BIAS_INIT: f64 = 0.01;

/// Gradients with the same shapes as the network's layers.
pub type Gradients = Vec<(Vec<f64>, Vec<f64>)>;

impl Mlp {
    pub fn new(n_inputs: usize, hidden: &[usize], n_classes: usize, seed: u64) -> Self {
        let mut rng = rng(seed);
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(n_classes);
        let last = sizes.len() - 2;
        Self {
            layers: sizes
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    // A small positive hidden bias keeps units off the ReLU
                    // kink when their whole input is zero.
                    let bias = if i < last { HIDDEN_BIAS_INIT } else { 0.0 };
                    Layer::he_uniform(w[0], w[1], bias, &mut rng)
                })
                .collect(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Activations of every layer, input first, logits last.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().unwrap());
            if i + 1 < self.layers.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().unwrap()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Mean smoothed cross-entropy over the batch.
    pub fn loss(&self, xs: &[Vec<f64>], labels: &[usize], smoothing: f64) -> f64 {
        let k = self.n_classes();
        xs.iter()
            .zip(labels)
            .map(|(x, &y)| {
                let p = softmax(&self.logits(x));
                let q = smoothed_target(y, k, smoothing);
                -q.iter().zip(&p).map(|(q, p)| q * p.max(1e-300).ln()).sum::<f64>()
            })
            .sum::<f64>()
            / xs.len() as f64
    }

    /// Mean loss and its gradient over the batch.
    pub fn gradients(&self, xs: &[Vec<f64>], labels: &[usize], smoothing: f64) -> (f64, Gradients) {
        let k = self.n_classes();
        let scale = 1.0 / xs.len() as f64;
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(labels) {
            let acts = self.activations(x);
            let p = softmax(acts.last().unwrap());
            let q = smoothed_target(y, k, smoothing);
            loss -= q.iter().zip(&p).map(|(q, p)| q * p.max(1e-300).ln()).sum::<f64>();
            // dL/dlogits of softmax + cross-entropy.
            let mut delta: Vec<f64> = p.iter().zip(&q).map(|(p, q)| (p - q) * scale).collect();
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..layer.n_out {
                    gb[o] += delta[o];
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, v) in row.iter_mut().zip(input) {
                        *g += delta[o] * v;
                    }
                }
                if li > 0 {
                    delta = (0..layer.n_in)
                        .map(|i| {
                            if input[i] <= 0.0 {
                                return 0.0;
                            }
                            (0..layer.n_out)
                                .map(|o| layer.weights[o * layer.n_in + i] * delta[o])
                                .sum()
                        })
                        .collect();
                }
            }
        }
        (loss * scale, grads)
    }

    fn param_mut(&mut self, index: usize) -> &mut f64 {
        let mut i = index;
        for l in &mut self.layers {
            if i < l.weights.len() {
                return &mut l.weights[i];
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return &mut l.bias[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// All parameters, layer by layer, weights before bias.
    pub fn flat_parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

fn flatten(grads: &Gradients) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|(w, b)| w.iter().chain(b).copied())
        .collect()
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize, spec: &TrainingSpec) -> Self {
        Self {
            lr: spec.learning_rate,
            beta1: spec.beta1,
            beta2: spec.beta2,
            eps: spec.epsilon,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for (layer, (gw, gb)) in mlp.layers.iter_mut().zip(grads) {
            for (p, g) in layer
                .weights
                .iter_mut()
                .chain(layer.bias.iter_mut())
                .zip(gw.iter().chain(gb))
            {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                i += 1;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpFit {
    pub mlp: Mlp,
    pub history: Vec<EpochRecord>,
    pub selected_epoch: usize,
}

pub fn accuracy_of(mlp: &Mlp, xs: &[Vec<f64>], labels: &[usize]) -> f64 {
    let hits = xs
        .iter()
        .zip(labels)
        .filter(|(x, &y)| argmax(&mlp.logits(x)) == y)
        .count();
    hits as f64 / xs.len() as f64
}

/// Mini-batch Adam on already-prepared feature rows. Validation accuracy is
/// measured after every epoch; the parameters of the first best epoch are
/// returned.
pub fn train_mlp(
    train_x: &[Vec<f64>],
    train_y: &[usize],
    val_x: &[Vec<f64>],
    val_y: &[usize],
    hidden: &[usize],
    n_classes: usize,
    spec: &TrainingSpec,
) -> Result<MlpFit, ModelError> {
    spec.validate()?;
    if train_x.is_empty() || val_x.is_empty() {
        return Err(ModelError::Empty("training and validation sets must be nonempty".into()));
    }
    let dim = train_x[0].len();
    for row in train_x.iter().chain(val_x) {
        if row.len() != dim {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
    }
    if let Some(&y) = train_y.iter().chain(val_y).find(|&&y| y >= n_classes) {
        return Err(ModelError::Invalid(format!(
            "label {y} outside {n_classes} classes"
        )));
    }
    let mut mlp = Mlp::new(dim, hidden, n_classes, mix_seed(spec.seed, 0));
    let mut adam = Adam::new(mlp.n_parameters(), spec);
    let mut shuffle_rng = rng(mix_seed(spec.seed, 1));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut history = Vec::with_capacity(spec.epochs);
    let mut best: Option<(f64, usize, Mlp)> = None;
    let mut batch_x = Vec::with_capacity(spec.batch_size);
    let mut batch_y = Vec::with_capacity(spec.batch_size);
    for epoch in 0..spec.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(spec.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(train_x[i].clone());
                batch_y.push(train_y[i]);
            }
            let (loss, grads) = mlp.gradients(&batch_x, &batch_y, spec.label_smoothing);
            loss_sum += loss * chunk.len() as f64;
            adam.step(&mut mlp, &grads);
        }
        let val_accuracy = accuracy_of(&mlp, val_x, val_y);
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_x.len() as f64,
            val_accuracy,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| val_accuracy > *acc) {
            best = Some((val_accuracy, epoch, mlp.clone()));
        }
    }
    let (_, selected_epoch, mlp) = best.expect("epochs >= 1");
    Ok(MlpFit {
        mlp,
        history,
        selected_epoch,
    })
}

pub const GRADIENT_CHECK_STEP: f64 = 1e-5;
pub const GRADIENT_CHECK_MAX_BATCH: usize = 8;

/// Largest relative error `|a − n| / max(|a|, |n|, 1e-6)` between analytic
/// gradients and central differences with step 1e-5, over every parameter.
pub fn gradient_check(
    mlp: &Mlp,
    xs: &[Vec<f64>],
    labels: &[usize],
    smoothing: f64,
) -> Result<f64, ModelError> {
    if xs.is_empty() || xs.len() > GRADIENT_CHECK_MAX_BATCH {
        return Err(ModelError::Invalid(format!(
            "gradient check takes 1..={GRADIENT_CHECK_MAX_BATCH} samples, got {}",
            xs.len()
        )));
    }
    let (_, grads) = mlp.gradients(xs, labels, smoothing);
    let analytic = flatten(&grads);
    let mut probe = mlp.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + GRADIENT_CHECK_STEP;
        let up = probe.loss(xs, labels, smoothing);
        *probe.param_mut(i) = orig - GRADIENT_CHECK_STEP;
        let down = probe.loss(xs, labels, smoothing);
        *probe.param_mut(i) = orig;
        let numeric = (up - down) / (2.0 * GRADIENT_CHECK_STEP);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}
