//! Fully connected layer `y = W x + b`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out_dim × in_dim`
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// Gradients of a [`DenseLayer`] plus the gradient flowing back to its input.
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub input: Matrix,
}

impl DenseLayer {
    pub fn new(weights: Matrix, biases: Vec<f64>) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::ShapeMismatch {
                context: "dense biases".into(),
                expected: (weights.rows(), 1),
                actual: (biases.len(), 1),
            });
        }
        Ok(DenseLayer { weights, biases })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(out_dim, in_dim, data),
            biases: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.biases.len()
    }

    /// `x` is `batch × in_dim`; returns `batch × out_dim`.
    pub fn forward(&self, x: &Matrix, layer: &str) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                layer: layer.to_string(),
                expected: self.in_dim(),
                actual: x.cols(),
            });
        }
        let (n, out, inp) = (x.rows(), self.out_dim(), self.in_dim());
        let mut y = Matrix::zeros(n, out);
        for s in 0..n {
            let xs = x.row(s);
            for o in 0..out {
                let w = self.weights.row(o);
                let mut acc = 0.0;
                for i in 0..inp {
                    acc += w[i] * xs[i];
                }
                y[(s, o)] = acc + self.biases[o];
            }
        }
        Ok(y)
    }

    /// Backpropagates `grad_out` (`batch × out_dim`) given the forward input `x`.
    pub fn backward(&self, x: &Matrix, grad_out: &Matrix) -> DenseGrads {
        let (n, out, inp) = (x.rows(), self.out_dim(), self.in_dim());
        let mut gw = Matrix::zeros(out, inp);
        let mut gb = vec![0.0; out];
        let mut gx = Matrix::zeros(n, inp);
        for s in 0..n {
            let xs = x.row(s);
            for o in 0..out {
                let g = grad_out[(s, o)];
                gb[o] += g;
                let w = self.weights.row(o);
                let gw_row = gw.row_mut(o);
                for i in 0..inp {
                    gw_row[i] += g * xs[i];
                }
                let gx_row = gx.row_mut(s);
                for i in 0..inp {
                    gx_row[i] += g * w[i];
                }
            }
        }
        DenseGrads {
            weights: gw,
            biases: gb,
            input: gx,
        }
    }
}
