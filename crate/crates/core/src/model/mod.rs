//! The dense classifier, the GRU window baseline, training and checkpoints.

pub mod checkpoint;
pub mod dnn;
pub mod rnn;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use dnn::{dnn_parameter_count, BlockOrder, Dnn, DnnConfig, CLASSES};
pub use rnn::{rnn_parameter_count, Rnn, RnnConfig};
pub use train::{train, Trainable, TrainingConfig, TrainingData, TrainingHistory};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::Matrix;

/// How raw `|ΔP|` watts are scaled before the first layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputScaling {
    /// Feed watts unchanged.
    None,
    /// Multiply by `1 / std` of the training inputs, fitted once when training starts.
    #[default]
    TrainingStd,
}

impl std::str::FromStr for InputScaling {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(InputScaling::None),
            "training-std" => Ok(InputScaling::TrainingStd),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown input scaling {other:?} (none | training-std)"
            ))),
        }
    }
}

/// Multiplier that gives `values` unit population standard deviation; 1 when
/// they are constant.
pub fn unit_std_scale(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 && var.is_finite() {
        1.0 / var.sqrt()
    } else {
        1.0
    }
}

/// Architecture and hyperparameters of either network kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Dnn(DnnConfig),
    Rnn(RnnConfig),
}

impl ModelConfig {
    pub fn build(&self, seed: u64) -> Result<Network> {
        Ok(match self {
            ModelConfig::Dnn(c) => Network::Dnn(Dnn::new(c.clone(), seed)?),
            ModelConfig::Rnn(c) => Network::Rnn(Rnn::new(c.clone(), seed)?),
        })
    }

    pub fn training(&self) -> &TrainingConfig {
        match self {
            ModelConfig::Dnn(c) => &c.training,
            ModelConfig::Rnn(c) => &c.training,
        }
    }

    /// Number of consecutive `|ΔP|` values one prediction consumes.
    pub fn window_length(&self) -> usize {
        match self {
            ModelConfig::Dnn(_) => 1,
            ModelConfig::Rnn(c) => c.window_length,
        }
    }

    /// Short display name: `NN`, `RNN_2`, `RNN_3`, ...
    pub fn label(&self) -> String {
        match self {
            ModelConfig::Dnn(_) => "NN".into(),
            ModelConfig::Rnn(c) => format!("RNN_{}", c.window_length),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            ModelConfig::Dnn(c) => c.parameter_count(),
            ModelConfig::Rnn(c) => c.parameter_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Dnn(Dnn),
    Rnn(Rnn),
}

impl Network {
    pub fn config(&self) -> ModelConfig {
        match self {
            Network::Dnn(n) => ModelConfig::Dnn(n.config.clone()),
            Network::Rnn(n) => ModelConfig::Rnn(n.config.clone()),
        }
    }

    /// Trains on rows of `inputs` (width = window length).
    pub fn train(&mut self, data: &TrainingData) -> Result<TrainingHistory> {
        match self {
            Network::Dnn(n) => {
                let cfg = n.config.training.clone();
                train(n, data, &cfg)
            }
            Network::Rnn(n) => {
                let cfg = n.config.training.clone();
                train(n, data, &cfg)
            }
        }
    }

    /// Inference on rows of `inputs`; returns the probability pair and label
    /// for every row.
    pub fn predict_rows(&self, inputs: &Matrix) -> Result<Vec<([f64; 2], usize)>> {
        match self {
            Network::Dnn(n) => n.predict_batch(inputs.as_slice()),
            Network::Rnn(n) => n.predict_batch(inputs),
        }
    }

    pub fn parameter_count(&self) -> usize {
        use crate::nn::params::Parameterized;
        match self {
            Network::Dnn(n) => n.parameter_count(),
            Network::Rnn(n) => n.parameter_count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_std_scale_cases() {
        assert_eq!(unit_std_scale(&[]), 1.0);
        assert_eq!(unit_std_scale(&[7.0, 7.0, 7.0]), 1.0);
        // population std of {0, 2} is 1; of {0, 8} is 4
        assert_eq!(unit_std_scale(&[0.0, 2.0]), 1.0);
        assert_eq!(unit_std_scale(&[0.0, 8.0]), 0.25);
    }

    #[test]
    fn input_scaling_names() {
        assert_eq!("none".parse::<InputScaling>().unwrap(), InputScaling::None);
        assert_eq!(
            "training-std".parse::<InputScaling>().unwrap(),
            InputScaling::TrainingStd
        );
        assert!("std".parse::<InputScaling>().is_err());
        assert_eq!(InputScaling::default(), InputScaling::TrainingStd);
    }

    #[test]
    fn scale_is_applied_before_the_first_layer() {
        let mut a = Dnn::new(DnnConfig::default(), 3).unwrap();
        let b = a.clone();
        a.input_scale = 0.5;
        let x = [0.0, 10.0, 400.0];
        let halved: Vec<f64> = x.iter().map(|v| v * 0.5).collect();
        assert_eq!(a.predict_batch(&x).unwrap(), b.predict_batch(&halved).unwrap());
    }
}
