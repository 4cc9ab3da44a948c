//! Stacked GRU over a short window of consecutive `|ΔP|` values, with a dense
//! softmax head on the last hidden state of the top layer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dnn::{probability_pairs, CLASSES};
use super::{InputScaling, TrainingConfig};
use crate::error::{Error, Result};
use crate::nn::gru::{GruCell, GruGrads, GruStepTrace};
use crate::nn::params::{BlockMut, BlockRef, Differentiable, Gradients, Parameterized};
use crate::nn::{loss, DenseLayer, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnConfig {
    pub window_length: usize,
    pub hidden_size: usize,
    pub layers: usize,
    #[serde(default)]
    pub input_scaling: InputScaling,
    pub training: TrainingConfig,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            window_length: 2,
            hidden_size: 18,
            layers: 4,
            input_scaling: InputScaling::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl RnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 {
            return Err(Error::InvalidConfig(format!(
                "window length must be >= 2, got {}",
                self.window_length
            )));
        }
        if self.hidden_size < 1 || self.layers < 1 {
            return Err(Error::InvalidConfig("hidden size and layer count must be >= 1".into()));
        }
        self.training.validate()
    }

    pub fn parameter_count(&self) -> usize {
        rnn_parameter_count(self.layers, self.hidden_size)
    }
}

pub fn rnn_parameter_count(layers: usize, hidden: usize) -> usize {
    let first = 3 * (hidden + hidden * hidden + hidden);
    let rest = (layers - 1) * 3 * (2 * hidden * hidden + hidden);
    first + rest + CLASSES * hidden + CLASSES
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rnn {
    pub config: RnnConfig,
    /// Multiplier applied to every window value before the first layer.
    pub input_scale: f64,
    pub layers: Vec<GruCell>,
    pub head: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct RnnTrace {
    /// `steps[layer][t]`
    pub steps: Vec<Vec<GruStepTrace>>,
    pub logits: Matrix,
    pub probs: Matrix,
}

impl Rnn {
    pub fn new(config: RnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden_size;
        let layers = (0..config.layers)
            .map(|l| GruCell::glorot(if l == 0 { 1 } else { h }, h, &mut rng))
            .collect();
        let head = DenseLayer::glorot(h, CLASSES, &mut rng);
        Ok(Rnn {
            config,
            input_scale: 1.0,
            layers,
            head,
        })
    }

    /// `windows` is `batch × window_length`, oldest value first.
    pub fn forward(&self, windows: &Matrix) -> Result<RnnTrace> {
        if windows.cols() != self.config.window_length {
            return Err(Error::DimensionMismatch {
                layer: "rnn window".into(),
                expected: self.config.window_length,
                actual: windows.cols(),
            });
        }
        let n = windows.rows();
        let h = self.config.hidden_size;
        let scale = self.input_scale;
        let mut layer_inputs: Vec<Matrix> = (0..windows.cols()).map(|t| windows.col(t).map(|v| v * scale)).collect();
        let mut steps = Vec::with_capacity(self.layers.len());
        for cell in &self.layers {
            let mut state = Matrix::zeros(n, h);
            let mut traces = Vec::with_capacity(layer_inputs.len());
            for x in &layer_inputs {
                let tr = cell.step(x, &state)?;
                state = tr.output.clone();
                traces.push(tr);
            }
            layer_inputs = traces.iter().map(|t| t.output.clone()).collect();
            steps.push(traces);
        }
        let last = layer_inputs.last().expect("window length >= 2");
        let logits = self.head.forward(last, "head")?;
        let probs = loss::softmax_rows(&logits);
        Ok(RnnTrace { steps, logits, probs })
    }

    /// Backpropagation through time of the summed negative log-likelihood.
    pub fn backward(&self, trace: &RnnTrace, labels: &[usize]) -> Result<Gradients> {
        if trace.steps.len() != self.layers.len() || trace.steps.iter().any(|s| s.len() != self.config.window_length) {
            return Err(Error::InvalidInput("trace does not match the network shape".into()));
        }
        let top = &trace.steps[self.layers.len() - 1];
        let last_h = &top[top.len() - 1].output;
        if last_h.cols() != self.head.in_dim() {
            return Err(Error::DimensionMismatch {
                layer: "head".into(),
                expected: self.head.in_dim(),
                actual: last_h.cols(),
            });
        }
        let d_logits = loss::softmax_nll_backward(&trace.probs, labels)?;
        let head_grads = self.head.backward(last_h, &d_logits);

        let n = d_logits.rows();
        let h = self.config.hidden_size;
        let t_len = self.config.window_length;
        // Gradient w.r.t. each time step's output of the current layer.
        let mut out_grads: Vec<Matrix> = (0..t_len).map(|_| Matrix::zeros(n, h)).collect();
        out_grads[t_len - 1] = head_grads.input;

        let mut cell_grads: Vec<GruGrads> = self.layers.iter().map(GruGrads::zeros_like).collect();
        for (l, cell) in self.layers.iter().enumerate().rev() {
            let mut carry = Matrix::zeros(n, h);
            let mut in_grads = vec![Matrix::zeros(n, cell.input_size()); t_len];
            for t in (0..t_len).rev() {
                let mut dh = out_grads[t].clone();
                for (a, b) in dh.as_mut_slice().iter_mut().zip(carry.as_slice()) {
                    *a += b;
                }
                let (dx, dh_prev) = cell.backward(&trace.steps[l][t], &dh, &mut cell_grads[l]);
                in_grads[t] = dx;
                carry = dh_prev;
            }
            out_grads = in_grads;
        }

        let mut grads = Gradients::default();
        for (l, cg) in cell_grads.into_iter().enumerate() {
            for (gate, g) in [("update", cg.update), ("reset", cg.reset), ("candidate", cg.candidate)] {
                grads.push_matrix(format!("gru.{l}.{gate}.input_weights"), g.input_weights);
                grads.push_matrix(format!("gru.{l}.{gate}.recurrent_weights"), g.recurrent_weights);
                grads.push_vector(format!("gru.{l}.{gate}.bias"), g.bias);
            }
        }
        grads.push_matrix("head.weights", head_grads.weights);
        grads.push_vector("head.biases", head_grads.biases);
        Ok(grads)
    }

    /// Label for the final time instance of the window.
    pub fn predict(&self, window: &[f64]) -> Result<([f64; 2], usize)> {
        let out = self.predict_batch(&Matrix::from_vec(1, window.len(), window.to_vec()))?;
        Ok(out[0])
    }

    pub fn predict_batch(&self, windows: &Matrix) -> Result<Vec<([f64; 2], usize)>> {
        if let Some(bad) = windows.as_slice().iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "network input must be an absolute power change (>= 0), got {bad}"
            )));
        }
        let trace = self.forward(windows)?;
        Ok(probability_pairs(&trace.probs))
    }
}

impl Parameterized for Rnn {
    fn param_blocks(&self) -> Vec<BlockRef<'_>> {
        let mut out = Vec::new();
        for (l, cell) in self.layers.iter().enumerate() {
            for (gate, g) in cell.gates() {
                out.push(BlockRef::matrix(
                    format!("gru.{l}.{gate}.input_weights"),
                    &g.input_weights,
                ));
                out.push(BlockRef::matrix(
                    format!("gru.{l}.{gate}.recurrent_weights"),
                    &g.recurrent_weights,
                ));
                out.push(BlockRef::vector(format!("gru.{l}.{gate}.bias"), &g.bias));
            }
        }
        out.push(BlockRef::matrix("head.weights".into(), &self.head.weights));
        out.push(BlockRef::vector("head.biases".into(), &self.head.biases));
        out
    }

    fn param_blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        let mut out = Vec::new();
        for (l, cell) in self.layers.iter_mut().enumerate() {
            for (gate, g) in cell.gates_mut() {
                out.push(BlockMut::matrix(
                    format!("gru.{l}.{gate}.input_weights"),
                    &mut g.input_weights,
                ));
                out.push(BlockMut::matrix(
                    format!("gru.{l}.{gate}.recurrent_weights"),
                    &mut g.recurrent_weights,
                ));
                out.push(BlockMut::vector(format!("gru.{l}.{gate}.bias"), &mut g.bias));
            }
        }
        out.push(BlockMut::matrix("head.weights".into(), &mut self.head.weights));
        out.push(BlockMut::vector("head.biases".into(), &mut self.head.biases));
        out
    }

    fn buffer_blocks(&self) -> Vec<BlockRef<'_>> {
        vec![BlockRef::vector(
            "input.scale".into(),
            std::slice::from_ref(&self.input_scale),
        )]
    }

    fn buffer_blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        vec![BlockMut::vector(
            "input.scale".into(),
            std::slice::from_mut(&mut self.input_scale),
        )]
    }
}

impl Differentiable for Rnn {
    fn loss(&self, inputs: &Matrix, labels: &[usize]) -> Result<f64> {
        loss::nll_loss(&self.forward(inputs)?.probs, labels)
    }

    fn loss_and_gradients(&self, inputs: &Matrix, labels: &[usize]) -> Result<(f64, Gradients)> {
        let trace = self.forward(inputs)?;
        let l = loss::nll_loss(&trace.probs, labels)?;
        Ok((l, self.backward(&trace, labels)?))
    }
}
