//! Small dense network engine: forward pass with inverted dropout, softmax
//! cross-entropy backpropagation, and Adam.
//!
//! Inputs may be dense slices or [`SparseVector`]s; the first layer only
//! touches nonzero input entries, which keeps hashed text features cheap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Read access to a feature vector's nonzero entries.
pub trait FeatureVector {
    fn dim(&self) -> usize;
    fn for_each_nonzero(&self, f: impl FnMut(usize, f64));
}

impl FeatureVector for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (i, &x) in self.iter().enumerate() {
            if x != 0.0 {
                f(i, x);
            }
        }
    }
}

impl FeatureVector for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn for_each_nonzero(&self, f: impl FnMut(usize, f64)) {
        self.as_slice().for_each_nonzero(f)
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }
}

impl FeatureVector for SparseVector {
    fn dim(&self) -> usize {
        self.dim
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            if v != 0.0 {
                f(i as usize, v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Dropout applied to this layer's output during training.
    pub dropout: f64,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// Feed-forward classifier. Checkpoints serialize this struct as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    /// Dropout applied to the input features during training.
    pub input_dropout: f64,
    pub layers: Vec<DenseLayer>,
}

/// One layer's shape for [`MlpModel::new`].
#[derive(Debug, Clone, Copy)]
pub struct LayerSpec {
    pub outputs: usize,
    pub activation: Activation,
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(outputs: usize, activation: Activation, dropout: f64) -> Self {
        Self {
            outputs,
            activation,
            dropout,
        }
    }
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(input_dim: usize, input_dropout: f64, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mut inputs = input_dim;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let limit = (6.0 / (inputs + spec.outputs) as f64).sqrt();
            let weights = (0..inputs * spec.outputs)
                .map(|_| (2.0 * rng.next_f64() - 1.0) * limit)
                .collect();
            layers.push(DenseLayer {
                inputs,
                outputs: spec.outputs,
                activation: spec.activation,
                dropout: spec.dropout,
                weights,
                bias: vec![0.0; spec.outputs],
            });
            inputs = spec.outputs;
        }
        let model = Self {
            input_dim,
            input_dropout,
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if self.layers.is_empty() {
            return bad("network has no layers");
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return bad("dropout rate must lie in [0, 1)");
        }
        let mut inputs = self.input_dim;
        for (i, l) in self.layers.iter().enumerate() {
            if l.inputs != inputs {
                return Err(Error::Dimension {
                    expected: inputs,
                    got: l.inputs,
                });
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return bad("parameter array has the wrong length");
            }
            if !(0.0..1.0).contains(&l.dropout) {
                return bad("dropout rate must lie in [0, 1)");
            }
            let last = i + 1 == self.layers.len();
            if last && (l.activation != Activation::Softmax || l.dropout != 0.0) {
                return bad("final layer must be softmax without dropout");
            }
            if !last && l.activation == Activation::Softmax {
                return bad("softmax is only allowed on the final layer");
            }
            inputs = l.outputs;
        }
        Ok(())
    }

    /// `[input_dim, hidden…, classes]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameter tensors in a fixed order: per layer, weights then bias.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect()
    }

    /// Inference: dropout off, returns class probabilities.
    pub fn predict<X: FeatureVector + ?Sized>(&self, x: &X) -> Result<Vec<f64>> {
        // The stream is never drawn from with train_mode off.
        let mut rng = SplitMix64::new(0);
        Ok(self.forward(x, false, &mut rng)?.probs)
    }

    pub fn forward<X: FeatureVector + ?Sized>(
        &self,
        x: &X,
        train_mode: bool,
        rng: &mut SplitMix64,
    ) -> Result<ForwardCache> {
        if x.dim() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: x.dim(),
            });
        }
        let mut input = Vec::new();
        let keep_in = 1.0 - self.input_dropout;
        x.for_each_nonzero(|i, v| {
            if train_mode && self.input_dropout > 0.0 {
                if rng.next_f64() >= self.input_dropout {
                    input.push((i, v / keep_in));
                }
            } else {
                input.push((i, v));
            }
        });

        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            if li == 0 {
                for (o, zo) in z.iter_mut().enumerate() {
                    let row = layer.row(o);
                    *zo += input.iter().map(|&(i, v)| row[i] * v).sum::<f64>();
                }
            } else {
                let prev = &post[li - 1];
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += layer.row(o).iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                }
            }
            let mut a = match layer.activation {
                Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
                Activation::None => z.clone(),
                Activation::Softmax => softmax(&z),
            };
            let mask = if train_mode && layer.dropout > 0.0 {
                let scale = 1.0 / (1.0 - layer.dropout);
                let m: Vec<f64> = (0..a.len())
                    .map(|_| if rng.next_f64() >= layer.dropout { scale } else { 0.0 })
                    .collect();
                for (ai, mi) in a.iter_mut().zip(&m) {
                    *ai *= mi;
                }
                Some(m)
            } else {
                None
            };
            pre.push(z);
            post.push(a);
            masks.push(mask);
        }
        let probs = post.last().cloned().unwrap_or_default();
        Ok(ForwardCache {
            input,
            pre,
            post,
            masks,
            probs,
        })
    }
}

/// Intermediates of one forward pass, consumed by backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Nonzero input entries after input dropout.
    pub input: Vec<(usize, f64)>,
    pub pre: Vec<Vec<f64>>,
    /// Layer outputs after activation and dropout.
    pub post: Vec<Vec<f64>>,
    pub masks: Vec<Option<Vec<f64>>>,
    pub probs: Vec<f64>,
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or_else(|| {
        Error::Invalid(format!("label {label} out of range for {} classes", probs.len()))
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Gradients shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Same order as [`MlpModel::params_mut`].
    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }
}

/// Mean cross-entropy over the batch and its exact gradient under the
/// dropout masks drawn during this call.
pub fn loss_and_grad<X: FeatureVector + ?Sized>(
    model: &MlpModel,
    batch: &[(&X, usize)],
    rng: &mut SplitMix64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = Gradients::zeros(model);
    let mut loss = 0.0;
    for &(x, label) in batch {
        let cache = model.forward(x, true, rng)?;
        loss += cross_entropy(&cache.probs, label)?;

        // Softmax + cross-entropy: dL/dz = p - onehot.
        let mut delta: Vec<f64> = cache.probs.clone();
        delta[label] -= 1.0;
        for d in delta.iter_mut() {
            *d *= scale;
        }

        for li in (0..model.layers.len()).rev() {
            let layer = &model.layers[li];
            let gw = &mut grads.weights[li];
            for (gb, d) in grads.bias[li].iter_mut().zip(&delta) {
                *gb += d;
            }
            if li == 0 {
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for &(i, v) in &cache.input {
                        row[i] += d * v;
                    }
                }
                break;
            }
            let prev_out = &cache.post[li - 1];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, a) in row.iter_mut().zip(prev_out) {
                    *g += d * a;
                }
            }
            // Back through the previous layer's dropout and activation.
            let prev = &model.layers[li - 1];
            let mut next = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                for (n, w) in next.iter_mut().zip(layer.row(o)) {
                    *n += d * w;
                }
            }
            if let Some(mask) = &cache.masks[li - 1] {
                for (n, m) in next.iter_mut().zip(mask) {
                    *n *= m;
                }
            }
            if prev.activation == Activation::Relu {
                for (n, z) in next.iter_mut().zip(&cache.pre[li - 1]) {
                    if *z <= 0.0 {
                        *n = 0.0;
                    }
                }
            }
            delta = next;
        }
    }
    Ok((loss * scale, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments for parameter tensors of the given lengths;
    /// beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(shapes: &[usize], learning_rate: f64) -> Self {
        Self {
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_model(model: &MlpModel, learning_rate: f64) -> Self {
        Self::new(&model.param_shapes(), learning_rate)
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::Dimension {
                    expected: m.len(),
                    got: p.len(),
                });
            }
        }
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let g = grads.as_slices();
    let mut p = model.params_mut();
    state.step(&mut p, &g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optional cap on the total number of optimizer steps.
    #[serde(default)]
    pub max_steps: Option<usize>,
    pub seed: u64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Invalid("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mini-batch Adam training. Batch order is reshuffled every epoch from
/// a stream seeded by `config.seed`; dropout masks use a second stream.
/// The final partial batch of each epoch is kept.
pub fn train<X: FeatureVector>(
    model: &mut MlpModel,
    dataset: &[(X, usize)],
    config: &TrainConfig,
) -> Result<TrainLog> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut order_rng = SplitMix64::new(derive_seed(config.seed, 0));
    let mut dropout_rng = SplitMix64::new(derive_seed(config.seed, 1));
    let mut adam = AdamState::for_model(model, config.learning_rate);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut log = TrainLog::default();
    let mut batch: Vec<(&X, usize)> = Vec::with_capacity(config.batch_size);

    'epochs: for _ in 0..config.epochs {
        if config.shuffle {
            order_rng.shuffle(&mut order);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|cap| log.steps >= cap) {
                break 'epochs;
            }
            batch.clear();
            batch.extend(chunk.iter().map(|&i| (&dataset[i].0, dataset[i].1)));
            let (loss, grads) = loss_and_grad(model, &batch, &mut dropout_rng)?;
            adam_step(model, &grads, &mut adam)?;
            epoch_loss += loss * chunk.len() as f64;
            log.steps += 1;
        }
        log.epoch_losses.push(epoch_loss / dataset.len() as f64);
    }
    Ok(log)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub steps: usize,
    /// Mean training loss per completed epoch (under dropout).
    pub epoch_losses: Vec<f64>,
}

/// Mean cross-entropy with dropout off.
pub fn mean_loss<X: FeatureVector>(model: &MlpModel, dataset: &[(X, usize)]) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in dataset {
        total += cross_entropy(&model.predict(x)?, *y)?;
    }
    Ok(total / dataset.len().max(1) as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Central finite-difference check of `loss_and_grad` with dropout off.
    pub(crate) fn max_grad_error(model: &MlpModel, batch: &[(Vec<f64>, usize)]) -> f64 {
        let mut m = model.clone();
        m.input_dropout = 0.0;
        for l in &mut m.layers {
            l.dropout = 0.0;
        }
        let refs: Vec<(&Vec<f64>, usize)> = batch.iter().map(|(x, y)| (x, *y)).collect();
        let (_, grads) = loss_and_grad(&m, &refs, &mut SplitMix64::new(0)).unwrap();
        let analytic: Vec<f64> = grads.as_slices().concat();
        let loss_at = |m: &MlpModel| -> f64 {
            batch
                .iter()
                .map(|(x, y)| cross_entropy(&m.predict(x).unwrap(), *y).unwrap())
                .sum::<f64>()
                / batch.len() as f64
        };
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut k = 0;
        for t in 0..m.params_mut().len() {
            let len = m.params_mut()[t].len();
            for i in 0..len {
                let orig = m.params_mut()[t][i];
                m.params_mut()[t][i] = orig + h;
                let up = loss_at(&m);
                m.params_mut()[t][i] = orig - h;
                let down = loss_at(&m);
                m.params_mut()[t][i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = analytic[k];
                let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(err);
                k += 1;
            }
        }
        worst
    }

    fn three_sample_fixture(dim: usize) -> Vec<(Vec<f64>, usize)> {
        let mut rng = SplitMix64::new(42);
        (0..3)
            .map(|i| ((0..dim).map(|_| rng.next_f64() * 2.0 - 1.0).collect(), i % 2))
            .collect()
    }

    #[test]
    fn zero_final_layer_gives_uniform() {
        let mut m = MlpModel::new(3, 0.0, &[LayerSpec::new(4, Activation::Softmax, 0.0)], 1).unwrap();
        m.layers[0].weights.iter_mut().for_each(|w| *w = 0.0);
        assert_eq!(m.predict(&vec![1.0, -2.0, 3.0]).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn inference_is_deterministic() {
        let m = meta_net(6, 3);
        let x = vec![0.2, 0.8, 0.5, 0.5, 0.9, 0.1];
        let a = m.predict(&x).unwrap();
        assert_eq!(a, m.predict(&x).unwrap());
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverted_dropout_scales_survivors() {
        let mut m = MlpModel::new(
            2,
            0.0,
            &[
                LayerSpec::new(64, Activation::None, 0.5),
                LayerSpec::new(2, Activation::Softmax, 0.0),
            ],
            3,
        )
        .unwrap();
        m.layers[0].bias.iter_mut().for_each(|b| *b = 1.0);
        let x = vec![0.0, 0.0];
        let cache = m.forward(&x, true, &mut SplitMix64::new(8)).unwrap();
        let out = &cache.post[0];
        assert!(out.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(out.iter().any(|&v| v == 0.0) && out.iter().any(|&v| v == 2.0));
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0).unwrap(), 0.0);
        assert!((cross_entropy(&[0.5, 0.5], 1).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((cross_entropy(&[0.9, 0.1], 1).unwrap() - 2.302585092994046).abs() < 1e-12);
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() + PROB_FLOOR.ln()).abs() < 1e-12);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    pub(crate) fn meta_net(input: usize, seed: u64) -> MlpModel {
        MlpModel::new(
            input,
            0.0,
            &[
                LayerSpec::new(32, Activation::Relu, 0.5),
                LayerSpec::new(16, Activation::Relu, 0.5),
                LayerSpec::new(2, Activation::Softmax, 0.0),
            ],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = meta_net(4, 11);
        let err = max_grad_error(&m, &three_sample_fixture(4));
        assert!(err < 1e-4, "max relative error {err}");

        let head = MlpModel::new(8, 0.1, &[LayerSpec::new(2, Activation::Softmax, 0.0)], 2).unwrap();
        let err = max_grad_error(&head, &three_sample_fixture(8));
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let m = meta_net(4, 5);
        let x = vec![0.1, 0.4, -0.3, 0.9];
        let mut rng = SplitMix64::new(0);
        let mut off = m.clone();
        off.layers.iter_mut().for_each(|l| l.dropout = 0.0);
        let (_, one) = loss_and_grad(&off, &[(&x, 1)], &mut rng).unwrap();
        let (_, two) = loss_and_grad(&off, &[(&x, 1), (&x, 1)], &mut rng).unwrap();
        for (a, b) in one.as_slices().concat().iter().zip(two.as_slices().concat()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dead_relu_gives_zero_hidden_grads() {
        let mut m = meta_net(4, 5);
        m.layers.iter_mut().for_each(|l| l.dropout = 0.0);
        let x = vec![0.0; 4];
        let (_, g) = loss_and_grad(&m, &[(&x, 0)], &mut SplitMix64::new(0)).unwrap();
        assert!(g.weights[0].iter().all(|&v| v == 0.0));
        assert!(g.weights[1].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sparse_and_dense_agree() {
        let head = MlpModel::new(6, 0.0, &[LayerSpec::new(2, Activation::Softmax, 0.0)], 4).unwrap();
        let sparse = SparseVector {
            dim: 6,
            indices: vec![1, 4],
            values: vec![0.6, 0.8],
        };
        assert_eq!(head.predict(&sparse).unwrap(), head.predict(&sparse.to_dense()).unwrap());
        assert!(head.predict(&vec![1.0; 5]).is_err());
    }

    #[test]
    fn adam_single_step() {
        // m = 0.1, v = 0.001; bias-corrected m_hat = v_hat = 1;
        // step = 5e-4 * 1 / (1 + 1e-8).
        let mut state = AdamState::new(&[1], 5e-4);
        let mut w = [0.0];
        state.step(&mut [&mut w], &[&[1.0]]).unwrap();
        assert_eq!(state.t, 1);
        assert!((w[0] - (-5.0e-4 / (1.0 + 1e-8))).abs() < 1e-15);
        assert!((w[0] + 5.0e-4).abs() < 1e-9);
    }

    #[test]
    fn adam_zero_grads_and_elementwise() {
        let mut state = AdamState::new(&[3], 1e-3);
        let mut w = [0.5, -0.5, 0.25];
        state.step(&mut [&mut w], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(w, [0.5, -0.5, 0.25]);

        let mut state = AdamState::new(&[2], 1e-3);
        let mut w = [1.0, 2.0];
        state.step(&mut [&mut w], &[&[0.3, 0.3]]).unwrap();
        assert!(((1.0 - w[0]) - (2.0 - w[1])).abs() < 1e-15);

        assert!(state.step(&mut [&mut w], &[&[0.3]]).is_err());
    }

    fn separable() -> Vec<(Vec<f64>, usize)> {
        // Class is the sign of x0 + x1; points kept away from the boundary.
        let mut rng = SplitMix64::new(77);
        let mut out = Vec::new();
        while out.len() < 60 {
            let x = vec![rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0];
            let s = x[0] + x[1];
            if s.abs() > 0.2 {
                out.push((x, usize::from(s > 0.0)));
            }
        }
        out
    }

    #[test]
    fn learns_separable_fixture() {
        let data = separable();
        let mut m = MlpModel::new(
            2,
            0.0,
            &[
                LayerSpec::new(8, Activation::Relu, 0.0),
                LayerSpec::new(2, Activation::Softmax, 0.0),
            ],
            9,
        )
        .unwrap();
        let before = mean_loss(&m, &data).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            batch_size: 8,
            epochs: 200,
            max_steps: None,
            seed: 3,
            shuffle: true,
        };
        let log = train(&mut m, &data, &cfg).unwrap();
        assert_eq!(log.steps, 200 * 8);
        let after = mean_loss(&m, &data).unwrap();
        assert!(after < before);
        let correct = data
            .iter()
            .filter(|(x, y)| {
                let p = m.predict(x).unwrap();
                usize::from(p[1] > p[0]) == *y
            })
            .count();
        assert_eq!(correct, data.len());

        let mut again = MlpModel::new(
            2,
            0.0,
            &[
                LayerSpec::new(8, Activation::Relu, 0.0),
                LayerSpec::new(2, Activation::Softmax, 0.0),
            ],
            9,
        )
        .unwrap();
        train(&mut again, &data, &cfg).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn training_errors() {
        let mut m = meta_net(2, 1);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 4,
            epochs: 1,
            max_steps: None,
            seed: 0,
            shuffle: true,
        };
        let empty: Vec<(Vec<f64>, usize)> = Vec::new();
        assert!(matches!(train(&mut m, &empty, &cfg), Err(Error::Empty(_))));
        let bad = TrainConfig { batch_size: 0, ..cfg };
        assert!(train(&mut m, &separable(), &bad).is_err());
    }

    #[test]
    fn model_validation() {
        let mut m = meta_net(4, 1);
        m.layers[2].activation = Activation::Relu;
        assert!(m.validate().is_err());
        let mut m = meta_net(4, 1);
        m.layers[1].inputs = 31;
        assert!(m.validate().is_err());
        assert_eq!(meta_net(10, 1).dims(), vec![10, 32, 16, 2]);
    }
}
