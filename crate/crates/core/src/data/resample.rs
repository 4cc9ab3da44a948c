//! Downsampling to one reading per epoch-aligned minute.

use super::series::{PowerSeries, Reading};
use crate::error::{Error, Result};

pub const MINUTE: i64 = 60;
pub const DEFAULT_MAX_GAP_MINUTES: usize = 3;

/// Mean of the raw readings in each minute bucket.
///
/// Up to `max_gap` empty buckets in a row are filled with the previous bucket's
/// value; a longer gap starts a new segment. Segment starts already present in
/// the input are kept.
pub fn resample_1min(series: &PowerSeries, max_gap: usize) -> Result<PowerSeries> {
    if series.is_empty() {
        return Err(Error::InvalidInput(format!(
            "cannot resample empty series {:?}",
            series.appliance_name
        )));
    }
    let mut out: Vec<Reading> = Vec::new();
    let mut starts: Vec<usize> = Vec::new();
    for segment in series.segments() {
        starts.push(out.len());
        let mut bucket = segment[0].timestamp.div_euclid(MINUTE) * MINUTE;
        let (mut sum, mut count) = (0.0, 0usize);
        let flush = |out: &mut Vec<Reading>, starts: &mut Vec<usize>, bucket: i64, mean: f64| {
            if let Some(prev) = out.last().copied() {
                let in_segment = *starts.last().expect("segment started") < out.len();
                let missing = ((bucket - prev.timestamp) / MINUTE - 1) as usize;
                if in_segment && missing > 0 {
                    if missing <= max_gap {
                        for k in 1..=missing {
                            out.push(Reading {
                                timestamp: prev.timestamp + MINUTE * k as i64,
                                watts: prev.watts,
                            });
                        }
                    } else {
                        starts.push(out.len());
                    }
                }
            }
            out.push(Reading {
                timestamp: bucket,
                watts: mean,
            });
        };
        for r in segment {
            let b = r.timestamp.div_euclid(MINUTE) * MINUTE;
            if b != bucket {
                flush(&mut out, &mut starts, bucket, sum / count as f64);
                bucket = b;
                sum = 0.0;
                count = 0;
            }
            sum += r.watts;
            count += 1;
        }
        flush(&mut out, &mut starts, bucket, sum / count as f64);
    }
    PowerSeries::with_segments(series.channel_id, series.appliance_name.clone(), out, starts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::delta;

    #[test]
    fn constant_minute_collapses() {
        let s = PowerSeries::from_watts(1_303_132_920, 1, &[100.0; 60]).unwrap();
        let r = resample_1min(&s, 3).unwrap();
        assert_eq!(r.watts(), vec![100.0]);
        assert_eq!(r.timestamps(), vec![1_303_132_920]);
    }

    #[test]
    fn bucket_mean() {
        let s = PowerSeries::from_watts(120, 10, &[100.0, 200.0]).unwrap();
        assert_eq!(resample_1min(&s, 3).unwrap().watts(), vec![150.0]);
    }

    #[test]
    fn short_gap_is_forward_filled() {
        // minutes 0, 1, then 4: two empty buckets
        let readings = vec![
            Reading {
                timestamp: 5,
                watts: 10.0,
            },
            Reading {
                timestamp: 65,
                watts: 20.0,
            },
            Reading {
                timestamp: 245,
                watts: 50.0,
            },
        ];
        let s = PowerSeries::new(None, "x", readings).unwrap();
        let r = resample_1min(&s, 3).unwrap();
        assert_eq!(r.watts(), vec![10.0, 20.0, 20.0, 20.0, 50.0]);
        assert_eq!(r.segment_starts(), &[0]);
    }

    #[test]
    fn long_gap_splits_segments() {
        let mut watts_a: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let a = PowerSeries::from_watts(0, 60, &watts_a).unwrap();
        let b = PowerSeries::from_watts(60 * 15, 60, &[7.0, 8.0, 9.0]).unwrap();
        let mut readings = a.readings().to_vec();
        readings.extend_from_slice(b.readings());
        let s = PowerSeries::new(None, "x", readings).unwrap();
        let r = resample_1min(&s, 3).unwrap();
        assert_eq!(r.segment_starts(), &[0, 5]);
        assert_eq!(delta(&r).len(), (5 - 1) + (3 - 1));
        watts_a.extend([7.0, 8.0, 9.0]);
        assert_eq!(r.watts(), watts_a);
    }

    #[test]
    fn output_is_minute_aligned_and_idempotent() {
        let s =
            PowerSeries::from_watts(1_303_132_929, 3, &(0..400).map(|i| (i % 17) as f64).collect::<Vec<_>>()).unwrap();
        let r = resample_1min(&s, 3).unwrap();
        assert!(r.timestamps().iter().all(|t| t % 60 == 0));
        assert_eq!(resample_1min(&r, 3).unwrap(), r);
    }

    #[test]
    fn empty_input_errors() {
        let s = PowerSeries::new(None, "x", vec![]).unwrap();
        assert!(resample_1min(&s, 3).is_err());
    }
}
