//! Meter ingestion, resampling, labeling, splitting and augmentation.

pub mod augment;
pub mod dataset;
pub mod experiment;
pub mod labels;
pub mod redd;
pub mod resample;
pub mod series;
pub mod threshold;

pub use augment::{augment_positives, augmentation_plan, duplication_factor, AugmentationPlan};
pub use dataset::{assemble_dataset, split, LabeledDataset, Sample};
pub use experiment::{Alpha, ApplianceEntry, ApplianceExperiment, ChannelSelector, ExperimentConfig, ModelSettings};
pub use labels::{delta, make_labels, Delta, DeltaSeries};
pub use redd::{parse_labels, parse_redd_channel};
pub use resample::{resample_1min, DEFAULT_MAX_GAP_MINUTES, MINUTE};
pub use series::{align, sum_aligned, PowerSeries, Reading};
pub use threshold::estimate_threshold;
