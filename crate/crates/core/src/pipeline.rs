//! End-to-end steps: load a house, label one appliance, split, augment,
//! train and evaluate.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    align, assemble_dataset, augmentation_plan, delta, make_labels, redd, resample_1min, split, ApplianceExperiment,
    ExperimentConfig, LabeledDataset, PowerSeries, Reading, MINUTE,
};
use crate::error::{Error, Result};
use crate::eval::{confusion, ConfusionCounts, MetricsReport, ReportEntry};
use crate::model::{Checkpoint, ModelConfig, Network, TrainingData, TrainingHistory};
use crate::nn::Matrix;
use crate::synth::GeneratedHouse;

/// One-minute aggregate and appliance signals on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseData {
    pub house: u32,
    pub aggregate: PowerSeries,
    pub appliances: BTreeMap<String, PowerSeries>,
}

pub fn house_dir(data_root: &Path, house: u32) -> PathBuf {
    data_root.join(format!("house_{house}"))
}

fn sum_same_grid(parts: &[&PowerSeries], name: &str) -> Result<PowerSeries> {
    let first = parts[0];
    let readings = (0..first.len())
        .map(|i| Reading {
            timestamp: first.readings()[i].timestamp,
            watts: parts.iter().map(|s| s.readings()[i].watts).sum(),
        })
        .collect();
    PowerSeries::with_segments(None, name, readings, first.segment_starts().to_vec())
}

/// Reads, resamples and aligns every channel the config refers to.
pub fn load_house(data_root: &Path, cfg: &ExperimentConfig) -> Result<HouseData> {
    let dir = house_dir(data_root, cfg.house);
    if !dir.is_dir() {
        return Err(Error::InvalidInput(format!(
            "house directory {} not found",
            dir.display()
        )));
    }
    let labels = redd::parse_labels(&redd::labels_path(&dir))?;
    let mains = cfg.mains.resolve(&labels, "mains")?;
    let mut groups: Vec<(String, Vec<u32>)> = Vec::new();
    for a in &cfg.appliances {
        groups.push((a.name.clone(), a.source().resolve(&labels, &a.name)?));
    }
    let wanted: BTreeSet<u32> = mains
        .iter()
        .chain(groups.iter().flat_map(|(_, c)| c))
        .copied()
        .collect();
    let wanted: Vec<u32> = wanted.into_iter().collect();
    let raw = redd::read_channels(&dir, &wanted)?;

    let mut resampled = Vec::with_capacity(wanted.len());
    for ch in &wanted {
        let series = &raw[ch];
        if series.is_empty() {
            return Err(Error::InvalidInput(format!(
                "channel {ch} of house {} is empty",
                cfg.house
            )));
        }
        resampled.push(resample_1min(series, cfg.max_gap_minutes)?);
    }
    let refs: Vec<&PowerSeries> = resampled.iter().collect();
    let aligned = align(&refs, MINUTE)?;
    if aligned[0].len() < 2 {
        return Err(Error::InvalidInput(format!(
            "house {}: channels share fewer than 2 minutes",
            cfg.house
        )));
    }
    let by_channel: BTreeMap<u32, &PowerSeries> = wanted.iter().copied().zip(aligned.iter()).collect();
    let pick = |chs: &[u32], name: &str| {
        let parts: Vec<&PowerSeries> = chs.iter().map(|c| by_channel[c]).collect();
        sum_same_grid(&parts, name)
    };
    let aggregate = pick(&mains, "aggregate")?;
    let mut appliances = BTreeMap::new();
    for (name, chs) in &groups {
        appliances.insert(name.clone(), pick(chs, name)?);
    }
    Ok(HouseData {
        house: cfg.house,
        aggregate,
        appliances,
    })
}

/// Uses a generated house directly, without going through files.
pub fn house_from_generated(generated: &GeneratedHouse, house: u32) -> HouseData {
    HouseData {
        house,
        aggregate: generated.aggregate.clone(),
        appliances: generated
            .appliances
            .iter()
            .map(|a| (a.spec.name.clone(), a.series.clone()))
            .collect(),
    }
}

/// Everything needed to train and test one model for one appliance.
#[derive(Debug, Clone)]
pub struct PreparedAppliance {
    pub experiment: ApplianceExperiment,
    pub window_length: usize,
    /// Full labeled series before splitting.
    pub dataset: LabeledDataset,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Extra copies made of each positive training sample.
    pub sigma: usize,
    /// Augmented training rows (width `window_length`).
    pub train_inputs: Matrix,
    pub train_labels: Vec<usize>,
    pub test_inputs: Matrix,
    pub test_labels: Vec<u8>,
}

fn rows(windows: &[Vec<f64>], width: usize) -> Matrix {
    let data: Vec<f64> = windows.iter().flatten().copied().collect();
    Matrix::from_vec(windows.len(), width, data)
}

pub fn prepare_appliance(
    house: &HouseData,
    experiment: &ApplianceExperiment,
    window_length: usize,
    seed: u64,
) -> Result<PreparedAppliance> {
    let appliance = house
        .appliances
        .get(&experiment.appliance)
        .ok_or_else(|| Error::UnknownAppliance {
            name: experiment.appliance.clone(),
            known: house.appliances.keys().cloned().collect(),
        })?;
    let agg_deltas = delta(&house.aggregate);
    let app_deltas = delta(appliance);
    if agg_deltas.timestamps() != app_deltas.timestamps() {
        return Err(Error::InvalidInput(format!(
            "appliance {} is not on the aggregate's time grid",
            experiment.appliance
        )));
    }
    let labels = make_labels(&app_deltas, experiment.threshold_watts)?;
    let dataset = assemble_dataset(&agg_deltas, &labels)?;
    let (train, test) = split(&dataset, experiment.training_samples)?;

    let windows = dataset.windows(window_length);
    let (train_windows, test_windows) = windows.split_at(experiment.training_samples);
    let plan = augmentation_plan(&train.labels(), experiment.alpha, seed)?;
    let train_inputs = rows(&plan.apply(train_windows), window_length);
    let train_labels = plan.apply(&train.labels()).into_iter().map(usize::from).collect();
    Ok(PreparedAppliance {
        experiment: experiment.clone(),
        window_length,
        sigma: plan.sigma,
        test_inputs: rows(test_windows, window_length),
        test_labels: test.labels(),
        dataset,
        train,
        test,
        train_inputs,
        train_labels,
    })
}

pub fn train_model(prepared: &PreparedAppliance, model: &ModelConfig, seed: u64) -> Result<(Network, TrainingHistory)> {
    if model.window_length() != prepared.window_length {
        return Err(Error::InvalidConfig(format!(
            "model expects windows of {}, data prepared with {}",
            model.window_length(),
            prepared.window_length
        )));
    }
    let mut net = model.build(seed)?;
    let data = TrainingData::new(prepared.train_inputs.clone(), prepared.train_labels.clone())?;
    let history = net.train(&data)?;
    Ok((net, history))
}

pub fn predict_labels(network: &Network, inputs: &Matrix) -> Result<Vec<u8>> {
    Ok(network
        .predict_rows(inputs)?
        .into_iter()
        .map(|(_, label)| label as u8)
        .collect())
}

pub fn evaluate(network: &Network, prepared: &PreparedAppliance) -> Result<ConfusionCounts> {
    let predicted = predict_labels(network, &prepared.test_inputs)?;
    confusion(&predicted, &prepared.test_labels)
}

/// Summary of one trained model, kept next to the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub appliance: String,
    pub model: String,
    pub training_rows: usize,
    pub positives_before_augmentation: usize,
    pub sigma: usize,
    pub test_rows: usize,
    pub final_loss: Option<f64>,
}

/// Trains and evaluates every configured appliance with every model.
pub fn run_experiment(
    house: &HouseData,
    cfg: &ExperimentConfig,
    models: &[ModelConfig],
) -> Result<(MetricsReport, Vec<(RunRecord, Checkpoint)>)> {
    let mut report = MetricsReport::default();
    let mut runs = Vec::new();
    for entry in &cfg.appliances {
        let experiment = cfg.experiment(&entry.name)?;
        for model in models {
            let prepared = prepare_appliance(house, &experiment, model.window_length(), cfg.seed)?;
            let (net, history) = train_model(&prepared, model, cfg.seed)?;
            let counts = evaluate(&net, &prepared)?;
            report.push(ReportEntry::new(house.house, &entry.name, &model.label(), counts));
            let record = RunRecord {
                appliance: entry.name.clone(),
                model: model.label(),
                training_rows: prepared.train_labels.len(),
                positives_before_augmentation: prepared.train.n_pos(),
                sigma: prepared.sigma,
                test_rows: prepared.test_labels.len(),
                final_loss: history.epoch_loss.last().copied(),
            };
            let ckpt = Checkpoint::new(&net, cfg.seed, Some(experiment.clone()), Some(history));
            runs.push((record, ckpt));
        }
    }
    Ok((report, runs))
}

/// Per-channel and aggregate minute counts written by an ingest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub house: u32,
    pub channels: BTreeMap<u32, usize>,
    pub aggregate_minutes: usize,
    pub aggregate_segments: usize,
}

/// Resamples every channel of `house_<n>` to one minute and writes it, with
/// `labels.dat`, under `out_root/house_<n>`.
pub fn ingest_house(data_root: &Path, house: u32, out_root: &Path, max_gap: usize) -> Result<IngestSummary> {
    let dir = house_dir(data_root, house);
    let labels_file = redd::labels_path(&dir);
    if !labels_file.is_file() {
        return Err(Error::MissingChannels {
            dir: dir.clone(),
            missing: vec!["labels.dat".into()],
        });
    }
    let labels = redd::parse_labels(&labels_file)?;
    if labels.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} lists no channels",
            labels_file.display()
        )));
    }
    let channels: Vec<u32> = labels.keys().copied().collect();
    let raw = redd::read_channels(&dir, &channels)?;
    let out_dir = house_dir(out_root, house);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut counts = BTreeMap::new();
    let mut mains = Vec::new();
    for (&ch, series) in &raw {
        if series.is_empty() {
            counts.insert(ch, 0);
            continue;
        }
        let r = resample_1min(series, max_gap)?;
        redd::write_channel(&redd::channel_path(&out_dir, ch), &r)?;
        counts.insert(ch, r.len());
        if labels[&ch] == "mains" {
            mains.push(r);
        }
    }
    redd::write_labels(&redd::labels_path(&out_dir), &labels)?;
    let (aggregate_minutes, aggregate_segments) = if mains.is_empty() {
        (0, 0)
    } else {
        let refs: Vec<&PowerSeries> = mains.iter().collect();
        let aligned = align(&refs, MINUTE)?;
        (aligned[0].len(), aligned[0].segment_starts().len())
    };
    Ok(IngestSummary {
        house,
        channels: counts,
        aggregate_minutes,
        aggregate_segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;
    use crate::synth::{generate_house, ApplianceSpec, NoiseSpec, SyntheticHouse};

    fn small_house() -> SyntheticHouse {
        SyntheticHouse {
            appliances: vec![
                ApplianceSpec::two_state("a", 300.0, 8.0, 4.0, 1.0),
                ApplianceSpec::two_state("b", 800.0, 60.0, 3.0, 2.0),
            ],
            noise: NoiseSpec {
                base_watts: 40.0,
                std_dev_watts: 2.0,
            },
            duration_minutes: 1500,
            start_timestamp: 1_303_084_800,
            seed: 4,
        }
    }

    #[test]
    fn file_round_trip_matches_in_memory() {
        let spec = small_house();
        let g = generate_house(&spec).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        crate::synth::write_redd_layout(&g, tmp.path(), 9).unwrap();
        let cfg = crate::synth::experiment_config(&spec, 9, 500);
        let from_files = load_house(tmp.path(), &cfg).unwrap();
        assert_eq!(from_files.aggregate.watts(), g.aggregate.watts());
        assert_eq!(from_files.appliances["b"].watts(), g.appliances[1].series.watts());
    }

    #[test]
    fn prepared_split_and_augmentation() {
        let spec = small_house();
        let g = generate_house(&spec).unwrap();
        let house = house_from_generated(&g, 1);
        let cfg = crate::synth::experiment_config(&spec, 1, 500);
        let exp = cfg.experiment("b").unwrap();
        let p = prepare_appliance(&house, &exp, 1, 0).unwrap();
        assert_eq!(p.dataset.len(), 1499);
        assert_eq!(p.test.len(), 999);
        assert_eq!(p.train_labels.len(), 500 + p.sigma * p.train.n_pos());
        assert_eq!(p.test_labels, g.appliances[1].labels[500..].to_vec());
        let x: Vec<f64> = p.test.samples.iter().map(|s: &Sample| s.x).collect();
        assert_eq!(p.test_inputs.as_slice(), &x[..]);
    }

    #[test]
    fn windows_line_up_with_the_dnn_input() {
        let spec = small_house();
        let house = house_from_generated(&generate_house(&spec).unwrap(), 1);
        let exp = crate::synth::experiment_config(&spec, 1, 500).experiment("a").unwrap();
        let p1 = prepare_appliance(&house, &exp, 1, 0).unwrap();
        let p3 = prepare_appliance(&house, &exp, 3, 0).unwrap();
        for r in 0..p1.test_inputs.rows() {
            assert_eq!(p3.test_inputs[(r, 2)], p1.test_inputs[(r, 0)]);
        }
        assert_eq!(p1.train_labels, p3.train_labels);
    }

    #[test]
    fn ingest_missing_directory_errors() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(ingest_house(tmp.path(), 1, tmp.path(), 3).is_err());
    }
}
