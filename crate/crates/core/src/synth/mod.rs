//! Synthetic households with known state-change events.
//!
//! Every appliance is a Markov chain over its power levels with geometric
//! dwell times; the aggregate is the sum of all appliances plus a baseline
//! noise process. All powers are quantized to multiples of [`QUANTUM`] watts
//! so sums and differences are exact in `f64`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::experiment::{Alpha, ApplianceEntry, ChannelSelector, ExperimentConfig, ModelSettings};
use crate::data::{redd, PowerSeries, DEFAULT_MAX_GAP_MINUTES, MINUTE};
use crate::error::{Error, Result};

pub const QUANTUM: f64 = 1.0 / 16.0;
/// Jitter draws are clipped to this many standard deviations.
pub const JITTER_CLIP: f64 = 3.0;

fn quantize(w: f64) -> f64 {
    (w / QUANTUM).round() * QUANTUM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplianceSpec {
    pub name: String,
    /// Power of each state in watts; state 0 is the starting state.
    pub levels: Vec<f64>,
    /// Mean time spent in each state, in minutes.
    pub mean_dwell_minutes: Vec<f64>,
    /// Per-minute power jitter (std-dev, watts) while at a non-zero level.
    pub jitter_watts: f64,
}

impl ApplianceSpec {
    pub fn two_state(name: &str, on_watts: f64, off_minutes: f64, on_minutes: f64, jitter: f64) -> Self {
        ApplianceSpec {
            name: name.into(),
            levels: vec![0.0, on_watts],
            mean_dwell_minutes: vec![off_minutes, on_minutes],
            jitter_watts: jitter,
        }
    }

    pub fn min_level_gap(&self) -> f64 {
        let mut sorted = self.levels.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Threshold that separates this appliance's level changes from jitter.
    pub fn threshold(&self) -> f64 {
        self.min_level_gap() / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("appliance {:?}: {m}", self.name)));
        if self.levels.len() < 2 {
            return bad("needs at least 2 levels".into());
        }
        if self.levels.len() != self.mean_dwell_minutes.len() {
            return bad("one mean dwell time per level".into());
        }
        if self.levels.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return bad("levels must be finite and >= 0".into());
        }
        if !(self.min_level_gap() > 0.0) {
            return bad("levels must be distinct".into());
        }
        if self.mean_dwell_minutes.iter().any(|d| !(*d >= 1.0)) {
            return bad("mean dwell times must be >= 1 minute".into());
        }
        if !(self.jitter_watts >= 0.0) {
            return bad("jitter must be >= 0".into());
        }
        // worst-case jitter swing plus quantization stays below the threshold
        if 2.0 * JITTER_CLIP * self.jitter_watts + 2.0 * QUANTUM >= self.threshold() {
            return bad(format!(
                "jitter {} W too large for a minimum level gap of {} W",
                self.jitter_watts,
                self.min_level_gap()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub base_watts: f64,
    pub std_dev_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticHouse {
    pub appliances: Vec<ApplianceSpec>,
    pub noise: NoiseSpec,
    pub duration_minutes: usize,
    /// Unix time of the first minute; must be a multiple of 60.
    pub start_timestamp: i64,
    pub seed: u64,
}

impl SyntheticHouse {
    pub fn validate(&self) -> Result<()> {
        if self.duration_minutes < 2 {
            return Err(Error::InvalidConfig("duration must be >= 2 minutes".into()));
        }
        if self.start_timestamp.rem_euclid(MINUTE) != 0 {
            return Err(Error::InvalidConfig("start timestamp must be minute aligned".into()));
        }
        if !(self.noise.std_dev_watts >= 0.0) || !(self.noise.base_watts >= 0.0) {
            return Err(Error::InvalidConfig("noise parameters must be >= 0".into()));
        }
        for (i, a) in self.appliances.iter().enumerate() {
            a.validate()?;
            if self.appliances[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidConfig(format!("appliance {:?} listed twice", a.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedAppliance {
    pub spec: ApplianceSpec,
    pub series: PowerSeries,
    pub states: Vec<usize>,
    /// 1 where the state differs between minute `i` and `i + 1`.
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedHouse {
    pub aggregate: PowerSeries,
    pub appliances: Vec<GeneratedAppliance>,
    /// Aggregate minus the appliance sum at every minute.
    pub noise: Vec<f64>,
}

impl GeneratedHouse {
    pub fn appliance(&self, name: &str) -> Option<&GeneratedAppliance> {
        self.appliances.iter().find(|a| a.spec.name == name)
    }
}

pub fn generate_house(spec: &SyntheticHouse) -> Result<GeneratedHouse> {
    spec.validate()?;
    let n = spec.duration_minutes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut appliances = Vec::with_capacity(spec.appliances.len());
    for a in &spec.appliances {
        let jitter = Normal::new(0.0, a.jitter_watts.max(f64::MIN_POSITIVE)).expect("validated std-dev");
        let mut states = Vec::with_capacity(n);
        let mut state = 0usize;
        for i in 0..n {
            if i > 0 && rng.random::<f64>() < 1.0 / a.mean_dwell_minutes[state] {
                // jump to a uniformly chosen different level
                let k = rng.random_range(0..a.levels.len() - 1);
                state = if k >= state { k + 1 } else { k };
            }
            states.push(state);
        }
        let watts: Vec<f64> = states
            .iter()
            .map(|&s| {
                let level = a.levels[s];
                let draw: f64 = jitter.sample(&mut rng);
                if level == 0.0 || a.jitter_watts == 0.0 {
                    level
                } else {
                    let j = draw.clamp(-JITTER_CLIP * a.jitter_watts, JITTER_CLIP * a.jitter_watts);
                    quantize((level + j).max(0.0))
                }
            })
            .collect();
        let labels = states.windows(2).map(|w| u8::from(w[0] != w[1])).collect();
        let series = PowerSeries::from_watts(spec.start_timestamp, MINUTE, &watts)?.named(None, a.name.clone());
        appliances.push(GeneratedAppliance {
            spec: a.clone(),
            series,
            states,
            labels,
        });
    }

    let normal = Normal::new(0.0, spec.noise.std_dev_watts.max(f64::MIN_POSITIVE)).expect("validated std-dev");
    let mut noise = Vec::with_capacity(n);
    let mut aggregate = Vec::with_capacity(n);
    for i in 0..n {
        let total: f64 = appliances.iter().map(|a| a.series.readings()[i].watts).sum();
        let draw: f64 = if spec.noise.std_dev_watts > 0.0 {
            normal.sample(&mut rng)
        } else {
            0.0
        };
        // clip so the aggregate never goes negative
        let e = quantize(spec.noise.base_watts + draw).max(-total);
        noise.push(e);
        aggregate.push(total + e);
    }
    let aggregate = PowerSeries::from_watts(spec.start_timestamp, MINUTE, &aggregate)?.named(None, "aggregate");
    Ok(GeneratedHouse {
        aggregate,
        appliances,
        noise,
    })
}

/// The fixed three-appliance household used by the end-to-end checks.
pub fn reference_scenario() -> SyntheticHouse {
    SyntheticHouse {
        appliances: vec![
            ApplianceSpec::two_state("fridge", 150.0, 15.0, 10.0, 2.0),
            ApplianceSpec::two_state("microwave", 900.0, 600.0, 3.0, 5.0),
            ApplianceSpec::two_state("dryer", 1400.0, 1000.0, 40.0, 10.0),
        ],
        noise: NoiseSpec {
            base_watts: 60.0,
            std_dev_watts: 4.0,
        },
        duration_minutes: 20_000,
        // 2011-04-18 00:00 UTC
        start_timestamp: 1_303_084_800,
        seed: 20_190_601,
    }
}

/// Experiment config matching a synthetic house written by [`write_redd_layout`].
pub fn experiment_config(spec: &SyntheticHouse, house: u32, training_samples: usize) -> ExperimentConfig {
    ExperimentConfig {
        house,
        alpha: Alpha::default(),
        seed: spec.seed,
        max_gap_minutes: DEFAULT_MAX_GAP_MINUTES,
        mains: ChannelSelector::by_label("mains"),
        model: ModelSettings::default(),
        appliances: spec
            .appliances
            .iter()
            .map(|a| ApplianceEntry {
                name: a.name.clone(),
                labels: vec![a.name.clone()],
                channels: Vec::new(),
                threshold_watts: a.threshold(),
                training_samples,
            })
            .collect(),
    }
}

/// Writes `house_<n>/` in the REDD low-frequency layout: the aggregate split
/// evenly over two mains channels, then one channel per appliance.
pub fn write_redd_layout(generated: &GeneratedHouse, root: &Path, house: u32) -> Result<PathBuf> {
    let dir = root.join(format!("house_{house}"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    // halving is exact, so the two mains channels sum back to the aggregate
    let half: Vec<f64> = generated.aggregate.watts().iter().map(|w| w / 2.0).collect();
    let start = generated.aggregate.readings()[0].timestamp;
    let mains = PowerSeries::from_watts(start, MINUTE, &half)?;
    let mut labels = BTreeMap::new();
    for ch in [1, 2] {
        redd::write_channel(&redd::channel_path(&dir, ch), &mains)?;
        labels.insert(ch, "mains".to_string());
    }
    for (k, a) in generated.appliances.iter().enumerate() {
        let ch = 3 + k as u32;
        redd::write_channel(&redd::channel_path(&dir, ch), &a.series)?;
        labels.insert(ch, a.spec.name.clone());
    }
    redd::write_labels(&redd::labels_path(&dir), &labels)?;
    Ok(dir)
}
