//! Numerical kernel: dense layers, tanh, batch normalization, softmax with
//! negative log-likelihood, GRU cells, Adam, and a finite-difference checker.
//!
//! Everything runs in `f64` on small row-major matrices where each row is one
//! sample. Layers expose explicit forward/backward functions; there is no
//! automatic differentiation.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod dense;
pub mod gradcheck;
pub mod gru;
pub mod loss;
mod matrix;
pub mod params;

pub use activation::{sigmoid, tanh_backward, tanh_forward};
pub use adam::{AdamConfig, AdamState};
pub use batchnorm::{BatchNorm, BatchStats, Mode};
pub use dense::DenseLayer;
pub use gradcheck::{check_gradients, gradient_check, GradCheckReport};
pub use gru::{GruCell, GruGrads, GruStepTrace};
pub use loss::{nll_loss, softmax, softmax_nll_backward, softmax_rows, PROBABILITY_FLOOR};
pub use matrix::Matrix;
pub use params::{Differentiable, Gradients, Parameterized};
