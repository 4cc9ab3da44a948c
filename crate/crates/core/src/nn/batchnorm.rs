//! Per-unit batch normalization with learnable scale/shift and running statistics.
//!
//! Train mode standardizes with the biased batch variance and returns the batch
//! statistics; the caller folds them into the running estimates with
//! [`BatchNorm::update_running`]. Infer mode uses the running estimates only and
//! is therefore independent of the batch composition.

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_DECAY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub epsilon: f64,
    /// Weight on the old running estimate.
    pub decay: f64,
}

/// Statistics captured by a forward pass, needed by the backward pass.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (population) variance of the batch.
    pub var: Vec<f64>,
    pub batch_size: usize,
    /// Standardized activations before the affine step.
    pub normalized: Matrix,
    pub inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub input: Matrix,
}

impl BatchNorm {
    pub fn new(width: usize, epsilon: f64, decay: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::InvalidConfig(format!("decay must be in (0,1), got {decay}")));
        }
        Ok(BatchNorm {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            epsilon,
            decay,
        })
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<(Matrix, BatchStats)> {
        let (n, w) = x.shape();
        if w != self.width() {
            return Err(Error::DimensionMismatch {
                layer: "batch norm".into(),
                expected: self.width(),
                actual: w,
            });
        }
        let (mean, var) = match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(Error::BatchTooSmall(n));
                }
                batch_moments(x)
            }
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let mut normalized = Matrix::zeros(n, w);
        let mut y = Matrix::zeros(n, w);
        for s in 0..n {
            for j in 0..w {
                let z = (x[(s, j)] - mean[j]) * inv_std[j];
                normalized[(s, j)] = z;
                y[(s, j)] = self.gamma[j] * z + self.beta[j];
            }
        }
        Ok((
            y,
            BatchStats {
                mean,
                var,
                batch_size: n,
                normalized,
                inv_std,
            },
        ))
    }

    /// Exponential moving average of the batch statistics. The running variance
    /// uses the unbiased estimate `var · n / (n − 1)`.
    pub fn update_running(&mut self, stats: &BatchStats) {
        let n = stats.batch_size as f64;
        let correction = if stats.batch_size > 1 { n / (n - 1.0) } else { 1.0 };
        for j in 0..self.width() {
            self.running_mean[j] = self.decay * self.running_mean[j] + (1.0 - self.decay) * stats.mean[j];
            self.running_var[j] = self.decay * self.running_var[j] + (1.0 - self.decay) * stats.var[j] * correction;
        }
    }

    /// Backward pass of a train-mode forward (batch statistics depend on `x`).
    pub fn backward(&self, stats: &BatchStats, grad_out: &Matrix) -> BatchNormGrads {
        let (n, w) = grad_out.shape();
        let nf = n as f64;
        let mut g_gamma = vec![0.0; w];
        let mut g_beta = vec![0.0; w];
        for s in 0..n {
            for j in 0..w {
                g_gamma[j] += grad_out[(s, j)] * stats.normalized[(s, j)];
                g_beta[j] += grad_out[(s, j)];
            }
        }
        let mut gx = Matrix::zeros(n, w);
        for j in 0..w {
            // dL/dz = gamma · dL/dy; sums over the batch of dz and dz·z
            let sum_dz = self.gamma[j] * g_beta[j];
            let sum_dz_z = self.gamma[j] * g_gamma[j];
            for s in 0..n {
                let dz = self.gamma[j] * grad_out[(s, j)];
                let z = stats.normalized[(s, j)];
                gx[(s, j)] = stats.inv_std[j] / nf * (nf * dz - sum_dz - z * sum_dz_z);
            }
        }
        BatchNormGrads {
            gamma: g_gamma,
            beta: g_beta,
            input: gx,
        }
    }

    /// Backward pass of an infer-mode forward (fixed statistics).
    pub fn backward_infer(&self, stats: &BatchStats, grad_out: &Matrix) -> BatchNormGrads {
        let (n, w) = grad_out.shape();
        let mut g_gamma = vec![0.0; w];
        let mut g_beta = vec![0.0; w];
        let mut gx = Matrix::zeros(n, w);
        for s in 0..n {
            for j in 0..w {
                let g = grad_out[(s, j)];
                g_gamma[j] += g * stats.normalized[(s, j)];
                g_beta[j] += g;
                gx[(s, j)] = g * self.gamma[j] * stats.inv_std[j];
            }
        }
        BatchNormGrads {
            gamma: g_gamma,
            beta: g_beta,
            input: gx,
        }
    }
}

fn batch_moments(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let (n, w) = x.shape();
    let nf = n as f64;
    let mut mean = vec![0.0; w];
    for s in 0..n {
        for j in 0..w {
            mean[j] += x[(s, j)];
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut var = vec![0.0; w];
    for s in 0..n {
        for j in 0..w {
            let d = x[(s, j)] - mean[j];
            var[j] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= nf);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BatchNorm {
        BatchNorm::new(1, DEFAULT_EPSILON, DEFAULT_DECAY).unwrap()
    }

    #[test]
    fn standardizes_two_samples() {
        let (y, stats) = unit().forward(&Matrix::column(&[1.0, 3.0]), Mode::Train).unwrap();
        let mean = (y[(0, 0)] + y[(1, 0)]) / 2.0;
        let var = ((y[(0, 0)] - mean).powi(2) + (y[(1, 0)] - mean).powi(2)) / 2.0;
        assert!(mean.abs() < 1e-12);
        // variance is var / (var + eps) with batch var = 1
        assert!((var - 1.0 / (1.0 + DEFAULT_EPSILON)).abs() < 1e-12);
        assert_eq!(stats.mean, vec![2.0]);
        assert_eq!(stats.var, vec![1.0]);
    }

    #[test]
    fn affine_applies_after_standardization() {
        let mut bn = unit();
        bn.gamma = vec![2.0];
        bn.beta = vec![5.0];
        let x = Matrix::column(&[0.5, -1.0, 4.0]);
        let (y, stats) = bn.forward(&x, Mode::Train).unwrap();
        for s in 0..3 {
            assert_eq!(y[(s, 0)], 2.0 * stats.normalized[(s, 0)] + 5.0);
        }
    }

    #[test]
    fn train_rejects_single_sample() {
        assert!(matches!(
            unit().forward(&Matrix::column(&[1.0]), Mode::Train),
            Err(Error::BatchTooSmall(1))
        ));
    }

    #[test]
    fn infer_is_batch_independent() {
        let mut bn = unit();
        bn.running_mean = vec![3.0];
        bn.running_var = vec![4.0];
        let alone = bn.forward(&Matrix::column(&[7.0]), Mode::Infer).unwrap().0;
        let mixed = bn.forward(&Matrix::column(&[-2.0, 7.0, 100.0]), Mode::Infer).unwrap().0;
        let again = bn.forward(&Matrix::column(&[7.0]), Mode::Infer).unwrap().0;
        assert_eq!(alone[(0, 0)], mixed[(1, 0)]);
        assert_eq!(alone, again);
    }

    #[test]
    fn running_stats_decay() {
        let mut bn = unit();
        let (_, stats) = bn.forward(&Matrix::column(&[1.0, 3.0]), Mode::Train).unwrap();
        bn.update_running(&stats);
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-15);
        // 0.9 · 1 + 0.1 · (1 · 2/1)
        assert!((bn.running_var[0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(BatchNorm::new(2, 0.0, 0.9).is_err());
        assert!(BatchNorm::new(2, 1e-5, 1.0).is_err());
    }
}
