//! Confusion counts, precision/recall/F-measure and comparison reports.

pub mod metrics;
pub mod report;

pub use metrics::{confusion, metrics, ConfusionCounts, Metrics};
pub use report::{
    published_f_measure, published_results, Cell, ComparisonTable, MetricsReport, ReferenceRow, ReportEntry,
};
