use super::series::PowerSeries;
use crate::error::{Error, Result};

/// `ΔP_i = P_{i+1} − P_i`, stamped with the time of `P_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    pub timestamp: i64,
    pub watts: f64,
}

/// Power differences within each segment of a series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaSeries {
    pub deltas: Vec<Delta>,
    /// Index of the first delta of each segment that produced any.
    pub segment_starts: Vec<usize>,
}

impl DeltaSeries {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.deltas.iter().map(|d| d.watts).collect()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.deltas.iter().map(|d| d.timestamp).collect()
    }
}

/// Differences between neighbours inside every segment. Segments of length 1
/// contribute nothing.
pub fn delta(series: &PowerSeries) -> DeltaSeries {
    let mut out = DeltaSeries::default();
    for seg in series.segments() {
        if seg.len() < 2 {
            continue;
        }
        out.segment_starts.push(out.deltas.len());
        out.deltas.extend(seg.windows(2).map(|w| Delta {
            timestamp: w[0].timestamp,
            watts: w[1].watts - w[0].watts,
        }));
    }
    out
}

/// Label 1 where the appliance's power changed by at least `threshold` watts.
pub fn make_labels(appliance_deltas: &DeltaSeries, threshold: f64) -> Result<Vec<u8>> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidConfig(format!("threshold must be > 0, got {threshold}")));
    }
    Ok(appliance_deltas
        .deltas
        .iter()
        .map(|d| u8::from(d.watts.abs() >= threshold))
        .collect())
}
