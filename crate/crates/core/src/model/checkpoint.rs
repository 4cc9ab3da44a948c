//! JSON checkpoints with named, shaped parameter blocks.
//!
//! Floats are written in shortest round-trip decimal form, so loading a
//! checkpoint reproduces every parameter bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, Network, TrainingHistory};
use crate::data::ApplianceExperiment;
use crate::error::{Error, Result};
use crate::nn::params::{BlockMut, Parameterized};

pub const CHECKPOINT_FORMAT: &str = "nilm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Param,
    Buffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredBlock {
    pub name: String,
    pub kind: BlockKind,
    pub shape: (usize, usize),
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub experiment: Option<ApplianceExperiment>,
    pub seed: u64,
    pub history: Option<TrainingHistory>,
    pub blocks: Vec<StoredBlock>,
}

fn stored<P: Parameterized>(net: &P) -> Vec<StoredBlock> {
    let tag = |kind: BlockKind| {
        move |b: crate::nn::params::BlockRef<'_>| StoredBlock {
            name: b.name,
            kind,
            shape: b.shape,
            values: b.values.to_vec(),
        }
    };
    let mut out: Vec<StoredBlock> = net.param_blocks().into_iter().map(tag(BlockKind::Param)).collect();
    out.extend(net.buffer_blocks().into_iter().map(tag(BlockKind::Buffer)));
    out
}

fn restore<P: Parameterized>(net: &mut P, blocks: &[StoredBlock]) -> Result<()> {
    let fill = |targets: Vec<BlockMut<'_>>, kind: BlockKind| -> Result<()> {
        let expected = blocks.iter().filter(|b| b.kind == kind).count();
        if expected != targets.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "expected {} {kind:?} blocks, found {expected}",
                targets.len()
            )));
        }
        for t in targets {
            let src = blocks
                .iter()
                .find(|b| b.kind == kind && b.name == t.name)
                .ok_or_else(|| Error::CorruptCheckpoint(format!("missing block {}", t.name)))?;
            if src.shape != t.shape || src.values.len() != t.values.len() {
                return Err(Error::ShapeMismatch {
                    context: format!("checkpoint block {}", t.name),
                    expected: t.shape,
                    actual: src.shape,
                });
            }
            if src.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::CorruptCheckpoint(format!("non-finite value in {}", t.name)));
            }
            t.values.copy_from_slice(&src.values);
        }
        Ok(())
    };
    fill(net.param_blocks_mut(), BlockKind::Param)?;
    fill(net.buffer_blocks_mut(), BlockKind::Buffer)
}

impl Checkpoint {
    pub fn new(
        network: &Network,
        seed: u64,
        experiment: Option<ApplianceExperiment>,
        history: Option<TrainingHistory>,
    ) -> Self {
        let blocks = match network {
            Network::Dnn(n) => stored(n),
            Network::Rnn(n) => stored(n),
        };
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: network.config(),
            experiment,
            seed,
            history,
            blocks,
        }
    }

    /// Rebuilds the network and checks every block's name and shape.
    pub fn network(&self) -> Result<Network> {
        let mut net = self.model.build(self.seed)?;
        match &mut net {
            Network::Dnn(n) => restore(n, &self.blocks)?,
            Network::Rnn(n) => restore(n, &self.blocks)?,
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::CorruptCheckpoint(format!("unknown format {:?}", header.format)));
        }
        if header.version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                found: header.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        ckpt.network()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dnn, DnnConfig, Rnn, RnnConfig, TrainingData};
    use crate::nn::Matrix;

    fn trained_dnn() -> Network {
        let mut cfg = DnnConfig::default();
        cfg.training.epochs = 2;
        cfg.training.batch_size = 8;
        let mut net = Network::Dnn(Dnn::new(cfg, 5).unwrap());
        let xs: Vec<f64> = (0..40)
            .map(|i| if i % 4 == 0 { 500.0 } else { 5.0 + i as f64 })
            .collect();
        let labels = xs.iter().map(|&x| usize::from(x >= 500.0)).collect();
        net.train(&TrainingData::new(Matrix::column(&xs), labels).unwrap())
            .unwrap();
        net
    }

    fn probe() -> Matrix {
        Matrix::column(&[0.0, 3.7, 150.0, 499.9, 1400.0])
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let net = trained_dnn();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &Checkpoint::new(&net, 5, None, None)).unwrap();
        let ckpt = load_checkpoint(&path).unwrap();
        let scale = ckpt.blocks.iter().find(|b| b.name == "input.scale").unwrap();
        assert_eq!(scale.kind, BlockKind::Buffer);
        assert_ne!(scale.values, vec![1.0]);
        let back = ckpt.network().unwrap();
        assert_eq!(back, net);
        assert_eq!(
            back.predict_rows(&probe()).unwrap(),
            net.predict_rows(&probe()).unwrap()
        );
    }

    #[test]
    fn rnn_round_trip() {
        let cfg = RnnConfig {
            window_length: 3,
            hidden_size: 4,
            layers: 2,
            ..RnnConfig::default()
        };
        let net = Network::Rnn(Rnn::new(cfg, 1).unwrap());
        let text = Checkpoint::new(&net, 1, None, None).to_json();
        assert_eq!(Checkpoint::from_json(&text).unwrap().network().unwrap(), net);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = Checkpoint::new(&trained_dnn(), 5, None, None).to_json();
        let cut = &text[..text.len() / 2];
        assert!(matches!(Checkpoint::from_json(cut), Err(Error::CorruptCheckpoint(_))));
    }

    #[test]
    fn version_bump_is_rejected() {
        let text = Checkpoint::new(&trained_dnn(), 5, None, None).to_json();
        let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            Checkpoint::from_json(&bumped),
            Err(Error::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn shape_tampering_is_rejected() {
        let mut ckpt = Checkpoint::new(&trained_dnn(), 5, None, None);
        ckpt.blocks[0].values.pop();
        ckpt.blocks[0].shape.0 -= 1;
        assert!(Checkpoint::from_json(&ckpt.to_json()).is_err());
    }
}
