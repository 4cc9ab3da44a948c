//! Threshold suggestion from an appliance's sub-meter readings: half the
//! smallest gap between adjacent power-state means.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::series::PowerSeries;
use crate::error::{Error, Result};

pub const KMEANS_RESTARTS: usize = 50;
const KMEANS_ITERATIONS: usize = 100;

/// Seeded 1-D k-means (best of [`KMEANS_RESTARTS`] random starts). Returns the
/// cluster means in ascending order.
pub fn cluster_levels(values: &[f64], k: usize, seed: u64) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 states, got {k}")));
    }
    if distinct.len() < k {
        return Err(Error::DegenerateSeries(format!(
            "{} distinct power values for {k} states; set the threshold manually",
            distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let mut centers: Vec<f64> = index::sample(&mut rng, distinct.len(), k)
            .into_iter()
            .map(|i| distinct[i])
            .collect();
        centers.sort_by(f64::total_cmp);
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for _ in 0..KMEANS_ITERATIONS {
            sums.iter_mut().for_each(|s| *s = 0.0);
            counts.iter_mut().for_each(|c| *c = 0);
            for &v in values {
                let c = nearest(&centers, v);
                sums[c] += v;
                counts[c] += 1;
            }
            let mut next = centers.clone();
            for c in 0..k {
                if counts[c] > 0 {
                    next[c] = sums[c] / counts[c] as f64;
                }
            }
            next.sort_by(f64::total_cmp);
            if next == centers {
                break;
            }
            centers = next;
        }
        let inertia: f64 = values
            .iter()
            .map(|&v| {
                let d = v - centers[nearest(&centers, v)];
                d * d
            })
            .sum();
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, centers));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn nearest(centers: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, c) in centers.iter().enumerate() {
        if (v - c).abs() < (v - centers[best]).abs() {
            best = i;
        }
    }
    best
}

/// Advisory threshold for `series`; shipped configs use fixed values instead.
pub fn estimate_threshold(series: &PowerSeries, num_states: usize, seed: u64) -> Result<f64> {
    if series.len() < num_states {
        return Err(Error::DegenerateSeries(format!(
            "{} readings for {num_states} states",
            series.len()
        )));
    }
    let means = cluster_levels(&series.watts(), num_states, seed)?;
    let gap = means.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(Error::DegenerateSeries(
            "power states collapse; set the threshold manually".into(),
        ));
    }
    Ok(gap / 2.0)
}
