//! Feed-forward classifier over a single scalar `|ΔP|`.
//!
//! `depth − 1` hidden blocks of width `hidden_width`, each a dense layer
//! followed by tanh and batch normalization (order configurable), then a dense
//! output layer of width 2 fed straight into softmax.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InputScaling, TrainingConfig};
use crate::error::{Error, Result};
use crate::nn::batchnorm::{BatchNorm, BatchStats, Mode, DEFAULT_DECAY, DEFAULT_EPSILON};
use crate::nn::params::{BlockMut, BlockRef, Differentiable, Gradients, Parameterized};
use crate::nn::{loss, tanh_backward, tanh_forward, DenseLayer, Matrix};

pub const CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockOrder {
    /// dense → tanh → batch norm
    DenseTanhNorm,
    /// dense → batch norm → tanh
    DenseNormTanh,
}

impl std::str::FromStr for BlockOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-tanh-norm" => Ok(BlockOrder::DenseTanhNorm),
            "dense-norm-tanh" => Ok(BlockOrder::DenseNormTanh),
            other => Err(Error::InvalidConfig(format!(
                "unknown block order {other:?} (dense-tanh-norm | dense-norm-tanh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnConfig {
    pub depth: usize,
    pub hidden_width: usize,
    pub block_order: BlockOrder,
    pub norm_epsilon: f64,
    pub norm_decay: f64,
    #[serde(default)]
    pub input_scaling: InputScaling,
    pub training: TrainingConfig,
}

impl Default for DnnConfig {
    fn default() -> Self {
        DnnConfig {
            depth: 5,
            hidden_width: 18,
            block_order: BlockOrder::DenseTanhNorm,
            norm_epsilon: DEFAULT_EPSILON,
            norm_decay: DEFAULT_DECAY,
            input_scaling: InputScaling::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl DnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::InvalidConfig(format!("depth must be >= 2, got {}", self.depth)));
        }
        if self.hidden_width < 1 {
            return Err(Error::InvalidConfig("hidden width must be >= 1".into()));
        }
        self.training.validate()
    }

    pub fn parameter_count(&self) -> usize {
        dnn_parameter_count(self.depth, self.hidden_width)
    }
}

/// Closed form for the trainable parameter count; `3H² + 15H + 2` at depth 5.
pub fn dnn_parameter_count(depth: usize, hidden: usize) -> usize {
    let blocks_after_first = depth - 2;
    // first block: dense 1→H (2H) + norm (2H); later blocks: H² + H + 2H; head: 2H + 2
    4 * hidden + blocks_after_first * (hidden * hidden + 3 * hidden) + CLASSES * hidden + CLASSES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenBlock {
    pub dense: DenseLayer,
    pub norm: BatchNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dnn {
    pub config: DnnConfig,
    /// Multiplier applied to every input before the first layer.
    pub input_scale: f64,
    pub hidden: Vec<HiddenBlock>,
    pub output: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct BlockTrace {
    pub input: Matrix,
    pub dense_out: Matrix,
    /// Output of the middle stage (tanh or norm, depending on order).
    pub middle: Matrix,
    pub norm_stats: BatchStats,
    pub output: Matrix,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct DnnTrace {
    pub mode: Mode,
    pub input: Matrix,
    pub blocks: Vec<BlockTrace>,
    pub logits: Matrix,
    pub probs: Matrix,
}

impl Dnn {
    pub fn new(config: DnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_width;
        let mut hidden = Vec::with_capacity(config.depth - 1);
        for b in 0..config.depth - 1 {
            let in_dim = if b == 0 { 1 } else { h };
            hidden.push(HiddenBlock {
                dense: DenseLayer::glorot(in_dim, h, &mut rng),
                norm: BatchNorm::new(h, config.norm_epsilon, config.norm_decay)?,
            });
        }
        let output = DenseLayer::glorot(h, CLASSES, &mut rng);
        Ok(Dnn {
            config,
            input_scale: 1.0,
            hidden,
            output,
        })
    }

    pub fn depth(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn forward(&self, inputs: &Matrix, mode: Mode) -> Result<DnnTrace> {
        let mut blocks = Vec::with_capacity(self.hidden.len());
        let scale = self.input_scale;
        let mut x = inputs.map(|v| v * scale);
        for (b, block) in self.hidden.iter().enumerate() {
            let dense_out = block.dense.forward(&x, &format!("hidden.{b}.dense"))?;
            let (middle, norm_stats, output) = match self.config.block_order {
                BlockOrder::DenseTanhNorm => {
                    let t = tanh_forward(&dense_out);
                    let (y, stats) = block.norm.forward(&t, mode)?;
                    (t, stats, y)
                }
                BlockOrder::DenseNormTanh => {
                    let (u, stats) = block.norm.forward(&dense_out, mode)?;
                    let y = tanh_forward(&u);
                    (u, stats, y)
                }
            };
            let next = output.clone();
            blocks.push(BlockTrace {
                input: x,
                dense_out,
                middle,
                norm_stats,
                output,
            });
            x = next;
        }
        let logits = self.output.forward(&x, "output")?;
        let probs = loss::softmax_rows(&logits);
        Ok(DnnTrace {
            mode,
            input: inputs.clone(),
            blocks,
            logits,
            probs,
        })
    }

    /// Gradients of the summed negative log-likelihood from a train-mode trace.
    pub fn backward(&self, trace: &DnnTrace, labels: &[usize]) -> Result<Gradients> {
        if trace.blocks.len() != self.hidden.len() {
            return Err(Error::InvalidInput(format!(
                "trace has {} hidden blocks, network has {}",
                trace.blocks.len(),
                self.hidden.len()
            )));
        }
        if trace.mode != Mode::Train {
            return Err(Error::InvalidInput("backward needs a train-mode trace".into()));
        }
        let last = trace.blocks.last().map_or(&trace.input, |b| &b.output);
        if last.cols() != self.output.in_dim() {
            return Err(Error::DimensionMismatch {
                layer: "output".into(),
                expected: self.output.in_dim(),
                actual: last.cols(),
            });
        }
        let d_logits = loss::softmax_nll_backward(&trace.probs, labels)?;
        let out_grads = self.output.backward(last, &d_logits);

        let mut per_block = Vec::with_capacity(self.hidden.len());
        let mut grad = out_grads.input;
        for (block, bt) in self.hidden.iter().zip(&trace.blocks).rev() {
            let (d_dense, norm_grads) = match self.config.block_order {
                BlockOrder::DenseTanhNorm => {
                    let ng = block.norm.backward(&bt.norm_stats, &grad);
                    (tanh_backward(&bt.middle, &ng.input), ng)
                }
                BlockOrder::DenseNormTanh => {
                    let du = tanh_backward(&bt.output, &grad);
                    let ng = block.norm.backward(&bt.norm_stats, &du);
                    (ng.input.clone(), ng)
                }
            };
            let dg = block.dense.backward(&bt.input, &d_dense);
            grad = dg.input.clone();
            per_block.push((dg, norm_grads));
        }
        per_block.reverse();

        let mut grads = Gradients::default();
        for (b, (dg, ng)) in per_block.into_iter().enumerate() {
            grads.push_matrix(format!("hidden.{b}.dense.weights"), dg.weights);
            grads.push_vector(format!("hidden.{b}.dense.biases"), dg.biases);
            grads.push_vector(format!("hidden.{b}.norm.gamma"), ng.gamma);
            grads.push_vector(format!("hidden.{b}.norm.beta"), ng.beta);
        }
        grads.push_matrix("output.weights", out_grads.weights);
        grads.push_vector("output.biases", out_grads.biases);
        Ok(grads)
    }

    /// Folds the batch statistics of a train-mode trace into the running estimates.
    pub fn apply_running_stats(&mut self, trace: &DnnTrace) {
        if trace.mode != Mode::Train {
            return;
        }
        for (block, bt) in self.hidden.iter_mut().zip(&trace.blocks) {
            block.norm.update_running(&bt.norm_stats);
        }
    }

    /// Inference on one `|ΔP|` value: probability pair and argmax label.
    pub fn predict(&self, abs_delta: f64) -> Result<([f64; 2], usize)> {
        let probs = self.predict_batch(&[abs_delta])?;
        Ok(probs[0])
    }

    pub fn predict_batch(&self, abs_deltas: &[f64]) -> Result<Vec<([f64; 2], usize)>> {
        if let Some(bad) = abs_deltas.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "network input must be an absolute power change (>= 0), got {bad}"
            )));
        }
        let trace = self.forward(&Matrix::column(abs_deltas), Mode::Infer)?;
        Ok(probability_pairs(&trace.probs))
    }
}

pub(crate) fn probability_pairs(probs: &Matrix) -> Vec<([f64; 2], usize)> {
    (0..probs.rows())
        .map(|r| {
            let p = [probs[(r, 0)], probs[(r, 1)]];
            (p, usize::from(p[1] > p[0]))
        })
        .collect()
}

impl Parameterized for Dnn {
    fn param_blocks(&self) -> Vec<BlockRef<'_>> {
        let mut out = Vec::new();
        for (b, block) in self.hidden.iter().enumerate() {
            out.push(BlockRef::matrix(
                format!("hidden.{b}.dense.weights"),
                &block.dense.weights,
            ));
            out.push(BlockRef::vector(
                format!("hidden.{b}.dense.biases"),
                &block.dense.biases,
            ));
            out.push(BlockRef::vector(format!("hidden.{b}.norm.gamma"), &block.norm.gamma));
            out.push(BlockRef::vector(format!("hidden.{b}.norm.beta"), &block.norm.beta));
        }
        out.push(BlockRef::matrix("output.weights".into(), &self.output.weights));
        out.push(BlockRef::vector("output.biases".into(), &self.output.biases));
        out
    }

    fn param_blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        let mut out = Vec::new();
        for (b, block) in self.hidden.iter_mut().enumerate() {
            out.push(BlockMut::matrix(
                format!("hidden.{b}.dense.weights"),
                &mut block.dense.weights,
            ));
            out.push(BlockMut::vector(
                format!("hidden.{b}.dense.biases"),
                &mut block.dense.biases,
            ));
            out.push(BlockMut::vector(
                format!("hidden.{b}.norm.gamma"),
                &mut block.norm.gamma,
            ));
            out.push(BlockMut::vector(format!("hidden.{b}.norm.beta"), &mut block.norm.beta));
        }
        out.push(BlockMut::matrix("output.weights".into(), &mut self.output.weights));
        out.push(BlockMut::vector("output.biases".into(), &mut self.output.biases));
        out
    }

    fn buffer_blocks(&self) -> Vec<BlockRef<'_>> {
        let mut out = vec![BlockRef::vector(
            "input.scale".into(),
            std::slice::from_ref(&self.input_scale),
        )];
        for (b, block) in self.hidden.iter().enumerate() {
            out.push(BlockRef::vector(
                format!("hidden.{b}.norm.running_mean"),
                &block.norm.running_mean,
            ));
            out.push(BlockRef::vector(
                format!("hidden.{b}.norm.running_var"),
                &block.norm.running_var,
            ));
        }
        out
    }

    fn buffer_blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        let mut out = vec![BlockMut::vector(
            "input.scale".into(),
            std::slice::from_mut(&mut self.input_scale),
        )];
        for (b, block) in self.hidden.iter_mut().enumerate() {
            out.push(BlockMut::vector(
                format!("hidden.{b}.norm.running_mean"),
                &mut block.norm.running_mean,
            ));
            out.push(BlockMut::vector(
                format!("hidden.{b}.norm.running_var"),
                &mut block.norm.running_var,
            ));
        }
        out
    }
}

impl Differentiable for Dnn {
    fn loss(&self, inputs: &Matrix, labels: &[usize]) -> Result<f64> {
        let trace = self.forward(inputs, Mode::Train)?;
        loss::nll_loss(&trace.probs, labels)
    }

    fn loss_and_gradients(&self, inputs: &Matrix, labels: &[usize]) -> Result<(f64, Gradients)> {
        let trace = self.forward(inputs, Mode::Train)?;
        let l = loss::nll_loss(&trace.probs, labels)?;
        Ok((l, self.backward(&trace, labels)?))
    }
}
