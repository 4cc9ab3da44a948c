//! Softmax output and the summed negative log-likelihood.

use super::Matrix;
use crate::error::{Error, Result};

/// Floor applied to the true-class probability before taking the log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Row-wise softmax of a `batch × K` matrix.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        out.row_mut(r).copy_from_slice(&softmax(logits.row(r)));
    }
    out
}

/// `Σ_i −ln p_i[label_i]` with the probability floored at [`PROBABILITY_FLOOR`].
pub fn nll_loss(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(probs, labels)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &l)| -probs[(i, l)].max(PROBABILITY_FLOOR).ln())
        .sum())
}

/// Gradient of the summed loss with respect to the softmax logits: `p − onehot`.
///
/// This is the derivative of the unclamped loss; it differs from the clamped
/// loss only where a true-class probability is below the floor.
pub fn softmax_nll_backward(probs: &Matrix, labels: &[usize]) -> Result<Matrix> {
    check_labels(probs, labels)?;
    let mut g = probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        g[(i, l)] -= 1.0;
    }
    Ok(g)
}

fn check_labels(probs: &Matrix, labels: &[usize]) -> Result<()> {
    if labels.len() != probs.rows() {
        return Err(Error::ShapeMismatch {
            context: "labels vs probabilities".into(),
            expected: (probs.rows(), 1),
            actual: (labels.len(), 1),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= probs.cols()) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: probs.cols(),
        });
    }
    Ok(())
}
