//! Detection of appliance operational state changes from a single aggregate
//! power meter.
//!
//! The input at each minute is the absolute change of the aggregate power,
//! `|P_{i+1} − P_i|`; the target is whether one particular appliance changed
//! state at that minute. Modules, bottom up:
//!
//! - [`nn`]: dense/tanh/batch-norm/softmax layers, the GRU cell, hand-written
//!   backpropagation, Adam and a finite-difference gradient checker.
//! - [`data`]: REDD-style ingestion, one-minute resampling, deltas, labels,
//!   train/test split and positive-sample augmentation.
//! - [`model`]: the dense classifier, the GRU window baseline, the training
//!   loop and checkpoints.
//! - [`eval`]: confusion counts, precision/recall/F-measure and reports.
//! - [`synth`]: synthetic households with known events.
//! - [`pipeline`]: the steps above wired together.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
