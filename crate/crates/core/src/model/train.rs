//! Seeded mini-batch training with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{unit_std_scale, Dnn, InputScaling, Rnn};
use crate::error::{Error, Result};
use crate::nn::batchnorm::Mode;
use crate::nn::params::{Differentiable, Gradients};
use crate::nn::{loss, AdamConfig, AdamState, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 64,
            epochs: 100,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch size must be >= 2, got {}",
                self.batch_size
            )));
        }
        self.adam.validate()
    }
}

/// Network inputs (one row per sample) with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
}

impl TrainingData {
    pub fn new(inputs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::ShapeMismatch {
                context: "training inputs vs labels".into(),
                expected: (inputs.rows(), 1),
                actual: (labels.len(), 1),
            });
        }
        Ok(TrainingData { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Mean per-sample loss over the full training set before any update.
    pub initial_loss: f64,
    /// Mean per-sample loss over the full training set after each epoch.
    pub epoch_loss: Vec<f64>,
    /// Mean of the mini-batch losses seen during each epoch.
    pub epoch_batch_loss: Vec<f64>,
    pub steps: u64,
    pub samples: usize,
}

impl TrainingHistory {
    /// Advisory: true when the final epoch loss is below the initial loss.
    pub fn improved(&self) -> bool {
        self.epoch_loss.last().is_some_and(|&l| l < self.initial_loss)
    }
}

/// A network the training loop can drive.
pub trait Trainable: Differentiable + Clone {
    /// Smallest batch a train-mode forward accepts.
    fn min_batch(&self) -> usize;

    /// Loss and gradients for one mini-batch, updating any running statistics.
    fn train_batch(&mut self, inputs: &Matrix, labels: &[usize]) -> Result<(f64, Gradients)>;

    /// Sets the input multiplier from the training inputs, if the config asks for it.
    fn fit_input_scale(&mut self, inputs: &Matrix);

    /// Train-mode loss over the whole dataset in one batch.
    fn full_loss(&self, data: &TrainingData) -> Result<f64> {
        self.loss(&data.inputs, &data.labels)
    }
}

impl Trainable for Dnn {
    fn min_batch(&self) -> usize {
        2
    }

    fn fit_input_scale(&mut self, inputs: &Matrix) {
        if self.config.input_scaling == InputScaling::TrainingStd {
            self.input_scale = unit_std_scale(inputs.as_slice());
        }
    }

    fn train_batch(&mut self, inputs: &Matrix, labels: &[usize]) -> Result<(f64, Gradients)> {
        let trace = self.forward(inputs, Mode::Train)?;
        let l = loss::nll_loss(&trace.probs, labels)?;
        let grads = self.backward(&trace, labels)?;
        self.apply_running_stats(&trace);
        Ok((l, grads))
    }
}

impl Trainable for Rnn {
    fn min_batch(&self) -> usize {
        1
    }

    fn fit_input_scale(&mut self, inputs: &Matrix) {
        if self.config.input_scaling == InputScaling::TrainingStd {
            self.input_scale = unit_std_scale(inputs.as_slice());
        }
    }

    fn train_batch(&mut self, inputs: &Matrix, labels: &[usize]) -> Result<(f64, Gradients)> {
        self.loss_and_gradients(inputs, labels)
    }
}

/// Trains `model` in place and returns the loss history.
///
/// The input scale is fitted first (unless `epochs` is 0). Each epoch visits a seeded permutation of the data in chunks of
/// `batch_size`; a trailing chunk smaller than the model's minimum batch is
/// merged into the previous chunk.
pub fn train<M: Trainable>(model: &mut M, data: &TrainingData, config: &TrainingConfig) -> Result<TrainingHistory> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if let Some(&bad) = data.labels.iter().find(|&&l| l > 1) {
        return Err(Error::LabelOutOfRange { label: bad, classes: 2 });
    }
    let positives = data.labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::SingleClass(0));
    }
    if positives == data.len() {
        return Err(Error::SingleClass(1));
    }
    if data.len() < model.min_batch() {
        return Err(Error::BatchTooSmall(data.len()));
    }

    if config.epochs > 0 {
        model.fit_input_scale(&data.inputs);
    }
    let n = data.len();
    let mut history = TrainingHistory {
        initial_loss: model.full_loss(data)? / n as f64,
        samples: n,
        ..TrainingHistory::default()
    };
    let mut adam = AdamState::new(&*model, config.adam)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let batches = batch_bounds(n, config.batch_size, model.min_batch());
        let mut batch_loss_sum = 0.0;
        for &(start, end) in &batches {
            let idx = &order[start..end];
            let inputs = data.inputs.select_rows(idx);
            let labels: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
            let (l, grads) = model.train_batch(&inputs, &labels)?;
            adam.step(model, &grads)?;
            batch_loss_sum += l / labels.len() as f64;
        }
        history.epoch_batch_loss.push(batch_loss_sum / batches.len() as f64);
        history.epoch_loss.push(model.full_loss(data)? / n as f64);
    }
    history.steps = adam.step;
    Ok(history)
}

fn batch_bounds(n: usize, batch_size: usize, min_batch: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n)
        .step_by(batch_size)
        .map(|s| (s, (s + batch_size).min(n)))
        .collect();
    if out.len() > 1 {
        let (s, e) = out[out.len() - 1];
        if e - s < min_batch {
            out.pop();
            out.last_mut().expect("at least one batch").1 = e;
        }
    }
    out
}
