//! Oversampling of the rare positive class.
//!
//! With `η = N_neg / N_pos`, every positive sample is copied `σ = max(1,
//! round(η·α))` extra times and the copies are scattered over uniformly random
//! positions of the training set. Original samples keep their relative order.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Extra copies per positive sample. Halves round up.
pub fn duplication_factor(n_pos: usize, n_neg: usize, alpha: f64) -> usize {
    let eta = n_neg as f64 / n_pos as f64;
    ((eta * alpha + 0.5).floor() as usize).max(1)
}

/// Source index of every element of the augmented sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentationPlan {
    pub order: Vec<usize>,
    pub sigma: usize,
}

impl AugmentationPlan {
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.order.iter().map(|&i| items[i].clone()).collect()
    }
}

pub fn augmentation_plan(labels: &[u8], alpha: f64, seed: u64) -> Result<AugmentationPlan> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
    }
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    if positives.is_empty() {
        return Err(Error::NoPositiveSamples);
    }
    let sigma = duplication_factor(positives.len(), labels.len() - positives.len(), alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut copies: Vec<usize> = positives.iter().flat_map(|&i| std::iter::repeat_n(i, sigma)).collect();
    copies.shuffle(&mut rng);

    let total = labels.len() + copies.len();
    let mut is_copy = vec![false; total];
    for slot in index::sample(&mut rng, total, copies.len()) {
        is_copy[slot] = true;
    }
    let (mut orig, mut dup) = (0..labels.len(), copies.into_iter());
    let order = is_copy
        .into_iter()
        .map(|c| if c { dup.next() } else { orig.next() }.expect("slot counts match"))
        .collect();
    Ok(AugmentationPlan { order, sigma })
}

pub fn augment_positives(train: &LabeledDataset, alpha: f64, seed: u64) -> Result<LabeledDataset> {
    let plan = augmentation_plan(&train.labels(), alpha, seed)?;
    Ok(LabeledDataset {
        samples: plan.apply(&train.samples),
        // the shuffled set has no temporal contiguity left
        segment_starts: vec![0],
        augmented: true,
        seed: Some(seed),
    })
}
