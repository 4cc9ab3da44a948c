//! Experiment configuration files (TOML).
//!
//! ```toml
//! house = 1
//! alpha = "1:8"
//! seed = 0
//!
//! [mains]
//! labels = ["mains"]
//!
//! [[appliance]]
//! name = "REFR"
//! labels = ["refrigerator"]
//! threshold_watts = 150
//! training_samples = 2000
//! ```
//!
//! Channels are picked either by `labels.dat` name (`labels`) or by index
//! (`channels`); all picked channels are summed into one signal.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::resample::DEFAULT_MAX_GAP_MINUTES;
use crate::error::{Error, Result};
use crate::model::{BlockOrder, DnnConfig, InputScaling, RnnConfig};

pub const DEFAULT_ALPHA: f64 = 1.0 / 8.0;

/// Target positive:negative ratio. Written either as a number or as `"p:n"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha(pub f64);

impl Default for Alpha {
    fn default() -> Self {
        Alpha(DEFAULT_ALPHA)
    }
}

impl std::str::FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("alpha {s:?} is neither a number nor a ratio like 1:8"));
        let value = match s.split_once(':') {
            Some((p, n)) => {
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                let n: f64 = n.trim().parse().map_err(|_| bad())?;
                p / n
            }
            None => s.trim().parse().map_err(|_| bad())?,
        };
        if !(value > 0.0) || !value.is_finite() {
            return Err(bad());
        }
        Ok(Alpha(value))
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(v) => v.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Which meter channels make up a signal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSelector {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<u32>,
}

impl ChannelSelector {
    pub fn by_label(name: &str) -> Self {
        ChannelSelector {
            labels: vec![name.to_string()],
            channels: Vec::new(),
        }
    }

    /// Channel indices picked by this selector, ascending.
    pub fn resolve(&self, labels: &BTreeMap<u32, String>, what: &str) -> Result<Vec<u32>> {
        let mut out: Vec<u32> = self.channels.clone();
        for name in &self.labels {
            let found: Vec<u32> = labels.iter().filter(|(_, l)| *l == name).map(|(&c, _)| c).collect();
            if found.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "{what}: no channel labelled {name:?} in labels.dat"
                )));
            }
            out.extend(found);
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidConfig(format!("{what}: no channels selected")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplianceEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<u32>,
    pub threshold_watts: f64,
    pub training_samples: usize,
}

impl ApplianceEntry {
    pub fn source(&self) -> ChannelSelector {
        ChannelSelector {
            labels: self.labels.clone(),
            channels: self.channels.clone(),
        }
    }
}

/// Optional overrides of the model and training defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    pub depth: Option<usize>,
    pub hidden_width: Option<usize>,
    pub block_order: Option<BlockOrder>,
    pub input_scaling: Option<InputScaling>,
    pub rnn_layers: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
}

impl ModelSettings {
    pub fn dnn_config(&self, seed: u64) -> DnnConfig {
        let mut c = DnnConfig::default();
        if let Some(v) = self.depth {
            c.depth = v;
        }
        if let Some(v) = self.hidden_width {
            c.hidden_width = v;
        }
        if let Some(v) = self.block_order {
            c.block_order = v;
        }
        if let Some(v) = self.input_scaling {
            c.input_scaling = v;
        }
        self.apply_training(&mut c.training, seed);
        c
    }

    pub fn rnn_config(&self, window_length: usize, seed: u64) -> RnnConfig {
        let mut c = RnnConfig {
            window_length,
            ..RnnConfig::default()
        };
        if let Some(v) = self.hidden_width {
            c.hidden_size = v;
        }
        if let Some(v) = self.rnn_layers.or(self.depth.map(|d| d.saturating_sub(1))) {
            c.layers = v;
        }
        if let Some(v) = self.input_scaling {
            c.input_scaling = v;
        }
        self.apply_training(&mut c.training, seed);
        c
    }

    fn apply_training(&self, t: &mut crate::model::TrainingConfig, seed: u64) {
        t.seed = seed;
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            t.adam.learning_rate = v;
        }
        if let Some(v) = self.beta1 {
            t.adam.beta1 = v;
        }
        if let Some(v) = self.beta2 {
            t.adam.beta2 = v;
        }
    }
}

fn default_max_gap() -> usize {
    DEFAULT_MAX_GAP_MINUTES
}

fn default_mains() -> ChannelSelector {
    ChannelSelector::by_label("mains")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub house: u32,
    #[serde(default)]
    pub alpha: Alpha,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_gap")]
    pub max_gap_minutes: usize,
    #[serde(default = "default_mains")]
    pub mains: ChannelSelector,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(rename = "appliance")]
    pub appliances: Vec<ApplianceEntry>,
}

/// One row of the experiment: everything needed to label, split and augment
/// the data for a single appliance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplianceExperiment {
    pub house: u32,
    pub appliance: String,
    pub threshold_watts: f64,
    pub training_samples: usize,
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.appliances.is_empty() {
            return Err(Error::InvalidConfig("no [[appliance]] entries".into()));
        }
        for (i, a) in self.appliances.iter().enumerate() {
            if !(a.threshold_watts > 0.0) || !a.threshold_watts.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "appliance {:?}: threshold_watts must be > 0",
                    a.name
                )));
            }
            if a.training_samples == 0 {
                return Err(Error::InvalidConfig(format!(
                    "appliance {:?}: training_samples must be > 0",
                    a.name
                )));
            }
            if self.appliances[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidConfig(format!("appliance {:?} listed twice", a.name)));
            }
        }
        Ok(())
    }

    pub fn appliance_names(&self) -> Vec<String> {
        self.appliances.iter().map(|a| a.name.clone()).collect()
    }

    pub fn appliance(&self, name: &str) -> Result<&ApplianceEntry> {
        self.appliances
            .iter()
            .find(|a| a.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownAppliance {
                name: name.to_string(),
                known: self.appliance_names(),
            })
    }

    pub fn experiment(&self, name: &str) -> Result<ApplianceExperiment> {
        let a = self.appliance(name)?;
        Ok(ApplianceExperiment {
            house: self.house,
            appliance: a.name.clone(),
            threshold_watts: a.threshold_watts,
            training_samples: a.training_samples,
            alpha: self.alpha.0,
        })
    }
}
