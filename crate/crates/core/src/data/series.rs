use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One power reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub watts: f64,
}

/// Timestamped readings of one channel, possibly split into contiguous segments.
///
/// Differences are only ever taken between neighbours inside a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub channel_id: Option<u32>,
    pub appliance_name: String,
    readings: Vec<Reading>,
    /// Index of the first reading of every segment; `[0]` for a one-segment series.
    segment_starts: Vec<usize>,
}

impl PowerSeries {
    /// A single-segment series. Timestamps must be strictly increasing and
    /// power finite and non-negative.
    pub fn new(channel_id: Option<u32>, appliance_name: impl Into<String>, readings: Vec<Reading>) -> Result<Self> {
        let starts = if readings.is_empty() { Vec::new() } else { vec![0] };
        Self::with_segments(channel_id, appliance_name, readings, starts)
    }

    pub fn with_segments(
        channel_id: Option<u32>,
        appliance_name: impl Into<String>,
        readings: Vec<Reading>,
        segment_starts: Vec<usize>,
    ) -> Result<Self> {
        for (i, r) in readings.iter().enumerate() {
            if !r.watts.is_finite() || r.watts < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "reading {i} at {} has invalid power {}",
                    r.timestamp, r.watts
                )));
            }
        }
        if let Some(i) = readings.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(Error::InvalidInput(format!(
                "timestamps not strictly increasing at reading {}",
                i + 1
            )));
        }
        let valid_starts = if readings.is_empty() {
            segment_starts.is_empty()
        } else {
            segment_starts.first() == Some(&0)
                && segment_starts.windows(2).all(|w| w[0] < w[1])
                && segment_starts.last().is_some_and(|&s| s < readings.len())
        };
        if !valid_starts {
            return Err(Error::InvalidInput(format!(
                "invalid segment starts {segment_starts:?}"
            )));
        }
        Ok(PowerSeries {
            channel_id,
            appliance_name: appliance_name.into(),
            readings,
            segment_starts,
        })
    }

    /// Convenience constructor for evenly spaced readings.
    pub fn from_watts(start: i64, step: i64, watts: &[f64]) -> Result<Self> {
        let readings = watts
            .iter()
            .enumerate()
            .map(|(i, &w)| Reading {
                timestamp: start + step * i as i64,
                watts: w,
            })
            .collect();
        PowerSeries::new(None, "", readings)
    }

    pub fn readings(&self) -> &[Reading] {
        &self.readings
    }

    pub fn watts(&self) -> Vec<f64> {
        self.readings.iter().map(|r| r.watts).collect()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.readings.iter().map(|r| r.timestamp).collect()
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn segment_starts(&self) -> &[usize] {
        &self.segment_starts
    }

    pub fn segments(&self) -> impl Iterator<Item = &[Reading]> + '_ {
        let ends = self
            .segment_starts
            .iter()
            .skip(1)
            .copied()
            .chain(std::iter::once(self.readings.len()));
        self.segment_starts
            .iter()
            .zip(ends)
            .map(move |(&s, e)| &self.readings[s..e])
    }

    pub fn named(mut self, channel_id: Option<u32>, name: impl Into<String>) -> Self {
        self.channel_id = channel_id;
        self.appliance_name = name.into();
        self
    }
}

/// Restricts every series to the timestamps they all share. All outputs get
/// the same segment starts: a new segment begins wherever consecutive shared
/// timestamps are more than `step` seconds apart or any input starts one.
pub fn align(series: &[&PowerSeries], step: i64) -> Result<Vec<PowerSeries>> {
    if series.is_empty() {
        return Ok(Vec::new());
    }
    let common = common_timestamps(series);
    let mut picked: Vec<Vec<Reading>> = vec![Vec::with_capacity(common.len()); series.len()];
    let mut starts = Vec::new();
    let mut cursors = vec![0usize; series.len()];
    let mut prev_ts: Option<i64> = None;
    for (k, &ts) in common.iter().enumerate() {
        let mut breaks = false;
        for ((s, cur), out) in series.iter().zip(cursors.iter_mut()).zip(picked.iter_mut()) {
            let rs = s.readings();
            while rs[*cur].timestamp < ts {
                *cur += 1;
            }
            out.push(rs[*cur]);
            breaks |= s.segment_starts.binary_search(cur).is_ok();
        }
        if breaks || prev_ts.is_none_or(|p| ts - p > step) {
            starts.push(k);
        }
        prev_ts = Some(ts);
    }
    series
        .iter()
        .zip(picked)
        .map(|(s, readings)| {
            PowerSeries::with_segments(s.channel_id, s.appliance_name.clone(), readings, starts.clone())
        })
        .collect()
}

/// Sum of channels over their shared timestamps (see [`align`]).
pub fn sum_aligned(series: &[&PowerSeries], step: i64, name: &str) -> Result<PowerSeries> {
    let aligned = align(series, step)?;
    let first = aligned
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to sum".into()))?;
    let readings = (0..first.len())
        .map(|i| Reading {
            timestamp: first.readings[i].timestamp,
            watts: aligned.iter().map(|s| s.readings[i].watts).sum(),
        })
        .collect();
    PowerSeries::with_segments(None, name, readings, first.segment_starts.clone())
}

fn common_timestamps(series: &[&PowerSeries]) -> Vec<i64> {
    let mut common: Vec<i64> = series[0].timestamps();
    for s in &series[1..] {
        let ts = s.timestamps();
        let mut out = Vec::with_capacity(common.len().min(ts.len()));
        let (mut i, mut j) = (0, 0);
        while i < common.len() && j < ts.len() {
            match common[i].cmp(&ts[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(common[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        common = out;
    }
    common
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(t: i64, w: f64) -> Reading {
        Reading { timestamp: t, watts: w }
    }

    #[test]
    fn validates_order_and_power() {
        assert!(PowerSeries::new(None, "x", vec![r(2, 1.0), r(1, 1.0)]).is_err());
        assert!(PowerSeries::new(None, "x", vec![r(1, 1.0), r(1, 1.0)]).is_err());
        assert!(PowerSeries::new(None, "x", vec![r(1, -1.0)]).is_err());
        assert!(PowerSeries::new(None, "x", vec![r(1, f64::NAN)]).is_err());
        assert!(PowerSeries::new(None, "x", vec![]).unwrap().is_empty());
    }

    #[test]
    fn sums_over_shared_timestamps() {
        let a = PowerSeries::new(None, "a", vec![r(0, 1.0), r(60, 2.0), r(120, 3.0), r(600, 4.0)]).unwrap();
        let b = PowerSeries::new(None, "b", vec![r(60, 10.0), r(120, 20.0), r(600, 30.0)]).unwrap();
        let s = sum_aligned(&[&a, &b], 60, "sum").unwrap();
        assert_eq!(s.watts(), vec![12.0, 23.0, 34.0]);
        assert_eq!(s.segment_starts(), &[0, 2]);
    }

    #[test]
    fn align_shares_segments() {
        let a = PowerSeries::new(None, "a", vec![r(0, 1.0), r(60, 2.0), r(180, 3.0)]).unwrap();
        let b = PowerSeries::new(None, "b", vec![r(0, 5.0), r(60, 6.0), r(120, 7.0), r(180, 8.0)]).unwrap();
        let out = align(&[&a, &b], 60).unwrap();
        assert_eq!(out[1].watts(), vec![5.0, 6.0, 8.0]);
        assert_eq!(out[0].segment_starts(), &[0, 2]);
        assert_eq!(out[1].segment_starts(), &[0, 2]);
        assert_eq!(out[1].appliance_name, "b");
    }

    #[test]
    fn input_segments_propagate() {
        let a = PowerSeries::with_segments(None, "a", vec![r(0, 1.0), r(60, 2.0), r(120, 3.0)], vec![0, 2]).unwrap();
        let s = sum_aligned(&[&a], 60, "s").unwrap();
        assert_eq!(s.segment_starts(), &[0, 2]);
        assert_eq!(s.segments().map(<[Reading]>::len).collect::<Vec<_>>(), vec![2, 1]);
    }
}
