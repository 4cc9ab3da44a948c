//! Gated recurrent unit cell.
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::Matrix;
use crate::error::{Error, Result};

/// Input and recurrent weights plus bias for one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// `hidden × input`
    pub input_weights: Matrix,
    /// `hidden × hidden`
    pub recurrent_weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    pub update: GateParams,
    pub reset: GateParams,
    pub candidate: GateParams,
}

/// Intermediate values of one cell step over a batch.
#[derive(Debug, Clone)]
pub struct GruStepTrace {
    pub input: Matrix,
    pub h_prev: Matrix,
    pub update: Matrix,
    pub reset: Matrix,
    pub reset_hidden: Matrix,
    pub candidate: Matrix,
    pub output: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateGrads {
    pub input_weights: Matrix,
    pub recurrent_weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruGrads {
    pub update: GateGrads,
    pub reset: GateGrads,
    pub candidate: GateGrads,
}

impl GateParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        GateParams {
            input_weights: Matrix::zeros(hidden, input),
            recurrent_weights: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    fn glorot<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut g = GateParams::zeros(input, hidden);
        let li = (6.0 / (input + hidden) as f64).sqrt();
        let lh = (6.0 / (2 * hidden) as f64).sqrt();
        g.input_weights
            .as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-li..=li));
        g.recurrent_weights
            .as_mut_slice()
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-lh..=lh));
        g
    }

    /// `W x + U h + b` for every row of the batch.
    fn pre_activation(&self, x: &Matrix, h: &Matrix) -> Matrix {
        let hidden = self.bias.len();
        let mut out = Matrix::zeros(x.rows(), hidden);
        for s in 0..x.rows() {
            let (xs, hs) = (x.row(s), h.row(s));
            for j in 0..hidden {
                let mut acc = 0.0;
                for (w, v) in self.input_weights.row(j).iter().zip(xs) {
                    acc += w * v;
                }
                for (u, v) in self.recurrent_weights.row(j).iter().zip(hs) {
                    acc += u * v;
                }
                out[(s, j)] = acc + self.bias[j];
            }
        }
        out
    }

    /// Accumulates parameter gradients for pre-activation gradient `da` and
    /// adds the input and recurrent-path gradients into `gx`, `gh`.
    fn backward(&self, x: &Matrix, h: &Matrix, da: &Matrix, acc: &mut GateGrads, gx: &mut Matrix, gh: &mut Matrix) {
        for s in 0..da.rows() {
            for j in 0..self.bias.len() {
                let g = da[(s, j)];
                acc.bias[j] += g;
                for i in 0..x.cols() {
                    acc.input_weights[(j, i)] += g * x[(s, i)];
                    gx[(s, i)] += g * self.input_weights[(j, i)];
                }
                for k in 0..h.cols() {
                    acc.recurrent_weights[(j, k)] += g * h[(s, k)];
                    gh[(s, k)] += g * self.recurrent_weights[(j, k)];
                }
            }
        }
    }
}

impl GateGrads {
    fn zeros_like(p: &GateParams) -> Self {
        GateGrads {
            input_weights: Matrix::zeros(p.input_weights.rows(), p.input_weights.cols()),
            recurrent_weights: Matrix::zeros(p.recurrent_weights.rows(), p.recurrent_weights.cols()),
            bias: vec![0.0; p.bias.len()],
        }
    }
}

impl GruGrads {
    pub fn zeros_like(cell: &GruCell) -> Self {
        GruGrads {
            update: GateGrads::zeros_like(&cell.update),
            reset: GateGrads::zeros_like(&cell.reset),
            candidate: GateGrads::zeros_like(&cell.candidate),
        }
    }
}

impl GruCell {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruCell {
            update: GateParams::zeros(input, hidden),
            reset: GateParams::zeros(input, hidden),
            candidate: GateParams::zeros(input, hidden),
        }
    }

    pub fn glorot<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        GruCell {
            update: GateParams::glorot(input, hidden, rng),
            reset: GateParams::glorot(input, hidden, rng),
            candidate: GateParams::glorot(input, hidden, rng),
        }
    }

    pub fn input_size(&self) -> usize {
        self.update.input_weights.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.update.bias.len()
    }

    pub fn gates(&self) -> [(&'static str, &GateParams); 3] {
        [
            ("update", &self.update),
            ("reset", &self.reset),
            ("candidate", &self.candidate),
        ]
    }

    pub fn gates_mut(&mut self) -> [(&'static str, &mut GateParams); 3] {
        [
            ("update", &mut self.update),
            ("reset", &mut self.reset),
            ("candidate", &mut self.candidate),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        let (i, h) = (self.input_size(), self.hidden_size());
        3 * (h * i + h * h + h)
    }

    fn validate(&self) -> Result<()> {
        let (i, h) = (self.input_size(), self.hidden_size());
        for (name, g) in self.gates() {
            if g.input_weights.shape() != (h, i) {
                return Err(shape_err(
                    format!("{name} input weights"),
                    (h, i),
                    g.input_weights.shape(),
                ));
            }
            if g.recurrent_weights.shape() != (h, h) {
                return Err(shape_err(
                    format!("{name} recurrent weights"),
                    (h, h),
                    g.recurrent_weights.shape(),
                ));
            }
            if g.bias.len() != h {
                return Err(shape_err(format!("{name} bias"), (h, 1), (g.bias.len(), 1)));
            }
        }
        Ok(())
    }

    /// Single-sample step.
    pub fn forward(&self, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        let trace = self.step(
            &Matrix::from_vec(1, x.len(), x.to_vec()),
            &Matrix::from_vec(1, h_prev.len(), h_prev.to_vec()),
        )?;
        Ok(trace.output.row(0).to_vec())
    }

    /// Batched step: `x` is `batch × input`, `h_prev` is `batch × hidden`.
    pub fn step(&self, x: &Matrix, h_prev: &Matrix) -> Result<GruStepTrace> {
        self.validate()?;
        let (i, h) = (self.input_size(), self.hidden_size());
        if x.cols() != i {
            return Err(Error::DimensionMismatch {
                layer: "gru input".into(),
                expected: i,
                actual: x.cols(),
            });
        }
        if h_prev.cols() != h || h_prev.rows() != x.rows() {
            return Err(shape_err("gru hidden state".into(), (x.rows(), h), h_prev.shape()));
        }
        let update = self.update.pre_activation(x, h_prev).map(sigmoid);
        let reset = self.reset.pre_activation(x, h_prev).map(sigmoid);
        let mut reset_hidden = reset.clone();
        for (rh, hp) in reset_hidden.as_mut_slice().iter_mut().zip(h_prev.as_slice()) {
            *rh *= hp;
        }
        let candidate = self.candidate.pre_activation(x, &reset_hidden).map(f64::tanh);
        let mut output = Matrix::zeros(x.rows(), h);
        for ((o, (&z, &c)), &hp) in output
            .as_mut_slice()
            .iter_mut()
            .zip(update.as_slice().iter().zip(candidate.as_slice()))
            .zip(h_prev.as_slice())
        {
            *o = (1.0 - z) * hp + z * c;
        }
        Ok(GruStepTrace {
            input: x.clone(),
            h_prev: h_prev.clone(),
            update,
            reset,
            reset_hidden,
            candidate,
            output,
        })
    }

    /// Backpropagates `grad_h` (gradient w.r.t. the step output) through one
    /// step, accumulating parameter gradients into `acc`. Returns the gradients
    /// w.r.t. the step input and the previous hidden state.
    pub fn backward(&self, trace: &GruStepTrace, grad_h: &Matrix, acc: &mut GruGrads) -> (Matrix, Matrix) {
        let (n, h) = grad_h.shape();
        let mut gx = Matrix::zeros(n, self.input_size());
        let mut gh = Matrix::zeros(n, h);
        let mut d_update = Matrix::zeros(n, h);
        let mut d_cand = Matrix::zeros(n, h);
        for s in 0..n {
            for j in 0..h {
                let g = grad_h[(s, j)];
                let z = trace.update[(s, j)];
                let c = trace.candidate[(s, j)];
                let hp = trace.h_prev[(s, j)];
                gh[(s, j)] += g * (1.0 - z);
                d_update[(s, j)] = g * (c - hp) * z * (1.0 - z);
                d_cand[(s, j)] = g * z * (1.0 - c * c);
            }
        }

        let mut g_reset_hidden = Matrix::zeros(n, h);
        self.candidate.backward(
            &trace.input,
            &trace.reset_hidden,
            &d_cand,
            &mut acc.candidate,
            &mut gx,
            &mut g_reset_hidden,
        );
        let mut d_reset = Matrix::zeros(n, h);
        for s in 0..n {
            for j in 0..h {
                let grh = g_reset_hidden[(s, j)];
                let r = trace.reset[(s, j)];
                gh[(s, j)] += grh * r;
                d_reset[(s, j)] = grh * trace.h_prev[(s, j)] * r * (1.0 - r);
            }
        }
        self.update.backward(
            &trace.input,
            &trace.h_prev,
            &d_update,
            &mut acc.update,
            &mut gx,
            &mut gh,
        );
        self.reset
            .backward(&trace.input, &trace.h_prev, &d_reset, &mut acc.reset, &mut gx, &mut gh);
        (gx, gh)
    }
}

fn shape_err(context: String, expected: (usize, usize), actual: (usize, usize)) -> Error {
    Error::ShapeMismatch {
        context,
        expected,
        actual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // σ(0) = 0.5 and tanh(0) = 0, so h' = 0.5 · h.
    #[test]
    fn zero_parameters_halve_state() {
        let cell = GruCell::zeros(1, 3);
        let h = cell.forward(&[2.5], &[0.4, -0.8, 0.1]).unwrap();
        assert_eq!(h, vec![0.2, -0.4, 0.05]);
    }

    #[test]
    fn zero_state_and_zero_candidate_stays_zero() {
        let mut cell = GruCell::glorot(2, 4, &mut ChaCha8Rng::seed_from_u64(1));
        cell.candidate = GateParams::zeros(2, 4);
        let h = cell.forward(&[0.3, -1.0], &[0.0; 4]).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_is_bounded_and_deterministic() {
        let cell = GruCell::glorot(1, 5, &mut ChaCha8Rng::seed_from_u64(2));
        let mut h = vec![0.0; 5];
        for x in [3.0, -2.0, 0.5, 1.5] {
            let next = cell.forward(&[x], &h).unwrap();
            assert_eq!(next, cell.forward(&[x], &h).unwrap());
            assert!(next.iter().all(|v| v.abs() < 1.0));
            h = next;
        }
        // saturated gates round to exactly ±1 in floating point
        let big = cell.forward(&[1e4], &h).unwrap();
        assert!(big.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let cell = GruCell::zeros(2, 3);
        assert!(cell.forward(&[1.0], &[0.0; 3]).is_err());
        assert!(cell.forward(&[1.0, 2.0], &[0.0; 2]).is_err());
    }

    #[test]
    fn parameter_count() {
        assert_eq!(GruCell::zeros(1, 18).parameter_count(), 3 * (18 + 324 + 18));
    }
}
