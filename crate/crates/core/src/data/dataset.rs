use serde::{Deserialize, Serialize};

use super::labels::DeltaSeries;
use crate::error::{Error, Result};

/// One time instance: the absolute aggregate power change and whether the
/// target appliance changed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub timestamp: i64,
    /// `|ΔP_i|` in watts.
    pub x: f64,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<Sample>,
    /// Index of the first sample of each contiguous run of minutes.
    pub segment_starts: Vec<usize>,
    pub augmented: bool,
    pub seed: Option<u64>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }

    pub fn n_neg(&self) -> usize {
        self.len() - self.n_pos()
    }

    pub fn inputs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// For every sample, the `len` most recent inputs ending at that sample
    /// (oldest first). Positions before the start of a segment are zero.
    pub fn windows(&self, len: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        let mut seg = 0;
        for i in 0..self.len() {
            while seg + 1 < self.segment_starts.len() && self.segment_starts[seg + 1] <= i {
                seg += 1;
            }
            let seg_start = self.segment_starts.get(seg).copied().unwrap_or(0);
            let w = (0..len)
                .map(|k| {
                    let back = len - 1 - k;
                    if i >= seg_start + back {
                        self.samples[i - back].x
                    } else {
                        0.0
                    }
                })
                .collect();
            out.push(w);
        }
        out
    }
}

/// Pairs `|ΔP_i|` of the aggregate with the appliance labels.
pub fn assemble_dataset(aggregate: &DeltaSeries, labels: &[u8]) -> Result<LabeledDataset> {
    if aggregate.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "aggregate deltas vs labels".into(),
            expected: (aggregate.len(), 1),
            actual: (labels.len(), 1),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::LabelOutOfRange {
            label: bad as usize,
            classes: 2,
        });
    }
    let samples = aggregate
        .deltas
        .iter()
        .zip(labels)
        .map(|(d, &label)| Sample {
            timestamp: d.timestamp,
            x: d.watts.abs(),
            label,
        })
        .collect();
    Ok(LabeledDataset {
        samples,
        segment_starts: aggregate.segment_starts.clone(),
        augmented: false,
        seed: None,
    })
}

/// Contiguous prefix of `training_samples` for training, the rest for testing.
pub fn split(dataset: &LabeledDataset, training_samples: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    if training_samples == 0 || training_samples >= dataset.len() {
        return Err(Error::InvalidConfig(format!(
            "training sample count must be in 1..{}, got {training_samples}",
            dataset.len()
        )));
    }
    let (head, tail) = dataset.samples.split_at(training_samples);
    let train_starts = dataset
        .segment_starts
        .iter()
        .copied()
        .filter(|&s| s < training_samples)
        .collect();
    let mut test_starts: Vec<usize> = vec![0];
    test_starts.extend(
        dataset
            .segment_starts
            .iter()
            .filter(|&&s| s > training_samples)
            .map(|s| s - training_samples),
    );
    Ok((
        LabeledDataset {
            samples: head.to_vec(),
            segment_starts: train_starts,
            augmented: false,
            seed: None,
        },
        LabeledDataset {
            samples: tail.to_vec(),
            segment_starts: test_starts,
            augmented: false,
            seed: None,
        },
    ))
}
