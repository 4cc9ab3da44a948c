use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(predictions: &[u8], truth: &[u8]) -> Result<ConfusionCounts> {
    if predictions.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            context: "predictions vs truth".into(),
            expected: (truth.len(), 1),
            actual: (predictions.len(), 1),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Precision, recall and F-measure. Any ratio with a zero denominator is 0 and
/// sets `undefined`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub undefined: bool,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let pr = ratio(c.tp, c.tp + c.fp);
    let re = ratio(c.tp, c.tp + c.fn_);
    let (precision, recall) = (pr.unwrap_or(0.0), re.unwrap_or(0.0));
    let sum = precision + recall;
    // 2PR/(P+R) reduced to counts, so the value is a single rounded division
    let f_measure = if c.tp > 0 {
        (2 * c.tp) as f64 / (2 * c.tp + c.fp + c.fn_) as f64
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f_measure,
        undefined: pr.is_none() || re.is_none() || sum == 0.0,
    }
}
