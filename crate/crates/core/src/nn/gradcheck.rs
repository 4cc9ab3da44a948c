//! Central finite-difference check of analytic gradients.
//!
//! The relative error of one entry is `|a − n| / max(|a|, |n|, ERROR_SCALE_FLOOR)`,
//! where `a` is the analytic and `n` the numeric derivative. The floor keeps
//! entries whose true gradient is zero (or nearly so) from being judged on
//! finite-difference round-off alone: with step `h` that round-off is about
//! `ε·|loss| / h`, roughly 1e-9 to 1e-8 for the small batches checked here.

use super::params::{Differentiable, Gradients};
use super::Matrix;
use crate::error::Result;

pub const DEFAULT_STEP: f64 = 1e-6;
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const ERROR_SCALE_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub name: String,
    pub worst_relative_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub blocks: Vec<BlockReport>,
}

impl GradCheckReport {
    /// Every block's worst relative error is strictly below the tolerance.
    pub fn passed(&self) -> bool {
        self.blocks.iter().all(|b| b.worst_relative_error < self.tolerance)
    }

    pub fn failing_blocks(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .filter(|b| !(b.worst_relative_error < self.tolerance))
            .map(|b| b.name.as_str())
            .collect()
    }

    pub fn max_relative_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.worst_relative_error).fold(0.0, f64::max)
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.blocks {
            let verdict = if b.worst_relative_error < self.tolerance {
                "ok"
            } else {
                "FAIL"
            };
            writeln!(
                f,
                "{:<40} {:>12.3e} [{}] analytic={:.6e} numeric={:.6e} {}",
                b.name, b.worst_relative_error, b.worst_index, b.analytic, b.numeric, verdict
            )?;
        }
        Ok(())
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(ERROR_SCALE_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compares `analytic` against central differences of the train-mode loss.
pub fn check_gradients<N>(
    net: &N,
    analytic: &Gradients,
    inputs: &Matrix,
    labels: &[usize],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    N: Differentiable + Clone,
{
    analytic.check_layout(net)?;
    let mut probe = net.clone();
    let mut blocks = Vec::with_capacity(analytic.blocks.len());
    for (b, grad) in analytic.blocks.iter().enumerate() {
        let mut worst = BlockReport {
            name: grad.name.clone(),
            worst_relative_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in 0..grad.values.len() {
            let original = probe.param_blocks()[b].values[i];
            probe.param_blocks_mut()[b].values[i] = original + step;
            let plus = probe.loss(inputs, labels)?;
            probe.param_blocks_mut()[b].values[i] = original - step;
            let minus = probe.loss(inputs, labels)?;
            probe.param_blocks_mut()[b].values[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(grad.values[i], numeric);
            if err > worst.worst_relative_error || err.is_nan() {
                worst.worst_relative_error = if err.is_nan() { f64::INFINITY } else { err };
                worst.worst_index = i;
                worst.analytic = grad.values[i];
                worst.numeric = numeric;
            }
        }
        blocks.push(worst);
    }
    Ok(GradCheckReport { tolerance, blocks })
}

/// Computes the analytic gradients of `net` and checks them with the default step.
pub fn gradient_check<N>(net: &N, inputs: &Matrix, labels: &[usize], tolerance: f64) -> Result<GradCheckReport>
where
    N: Differentiable + Clone,
{
    let (_, grads) = net.loss_and_gradients(inputs, labels)?;
    check_gradients(net, &grads, inputs, labels, DEFAULT_STEP, tolerance)
}
