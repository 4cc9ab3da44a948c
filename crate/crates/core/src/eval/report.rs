//! Comparison tables: one row per model, one column per appliance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{metrics, ConfusionCounts, Metrics};
use crate::error::{Error, Result};

/// Published F-measures for the three REDD houses, transcribed by hand. These
/// are reference figures only and are never produced by this crate.
pub const PUBLISHED_RESULTS_CSV: &str = include_str!("../../reference/published_results.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub house: u32,
    pub appliance: String,
    pub model: String,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

impl ReportEntry {
    pub fn new(house: u32, appliance: &str, model: &str, counts: ConfusionCounts) -> Self {
        ReportEntry {
            house,
            appliance: appliance.to_string(),
            model: model.to_string(),
            counts,
            metrics: metrics(&counts),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub entries: Vec<ReportEntry>,
}

/// A published F-measure for one (house, model, appliance) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub house: u32,
    pub model: String,
    pub appliance: String,
    pub f_measure: f64,
}

pub fn published_results() -> Vec<ReferenceRow> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(PUBLISHED_RESULTS_CSV.as_bytes());
    reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .expect("bundled reference table is well formed")
}

pub fn published_f_measure(house: u32, model: &str, appliance: &str) -> Option<f64> {
    published_results()
        .into_iter()
        .find(|r| r.house == house && r.model == model && r.appliance == appliance)
        .map(|r| r.f_measure)
}

/// A rendered table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Computed { f_measure: f64, undefined: bool },
    Reference(f64),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub house: u32,
    pub appliances: Vec<String>,
    /// (row label, cells in appliance order)
    pub rows: Vec<(String, Vec<Cell>)>,
}

fn fmt_value(v: f64) -> String {
    format!("{v:.4}")
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["house".to_string(), "model".to_string()];
        header.extend(self.appliances.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, cells) in &self.rows {
            let mut rec = vec![self.house.to_string(), label.clone()];
            rec.extend(cells.iter().map(|c| match c {
                Cell::Computed { f_measure, .. } => fmt_value(*f_measure),
                Cell::Reference(v) => format!("{v:.2}"),
                Cell::Missing => String::new(),
            }));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Aligned plain text. Undefined metrics carry a `*`; published values
    /// are marked with `(ref)` in the row label.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut header = vec![format!("House {}", self.house)];
        header.extend(self.appliances.iter().cloned());
        grid.push(header);
        let mut any_undefined = false;
        for (label, cells) in &self.rows {
            let mut line = vec![label.clone()];
            for c in cells {
                line.push(match c {
                    Cell::Computed { f_measure, undefined } => {
                        any_undefined |= *undefined;
                        format!("{}{}", fmt_value(*f_measure), if *undefined { "*" } else { "" })
                    }
                    Cell::Reference(v) => format!("{v:.2}"),
                    Cell::Missing => "-".into(),
                });
            }
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, &w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).expect("string write");
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                writeln!(out, "{}", "-".repeat(total)).expect("string write");
            }
        }
        if any_undefined {
            out.push_str("* undefined: a precision or recall denominator was zero\n");
        }
        out
    }
}

impl MetricsReport {
    pub fn push(&mut self, entry: ReportEntry) {
        self.entries.push(entry);
    }

    pub fn houses(&self) -> Vec<u32> {
        self.entries
            .iter()
            .map(|e| e.house)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Rows in order of first appearance; columns likewise.
    pub fn table(&self, house: u32, with_reference: bool) -> ComparisonTable {
        let mine: Vec<&ReportEntry> = self.entries.iter().filter(|e| e.house == house).collect();
        let mut appliances: Vec<String> = Vec::new();
        let mut models: Vec<String> = Vec::new();
        for e in &mine {
            if !appliances.contains(&e.appliance) {
                appliances.push(e.appliance.clone());
            }
            if !models.contains(&e.model) {
                models.push(e.model.clone());
            }
        }
        let lookup: BTreeMap<(&str, &str), &ReportEntry> = mine
            .iter()
            .map(|e| ((e.model.as_str(), e.appliance.as_str()), *e))
            .collect();
        let mut rows: Vec<(String, Vec<Cell>)> = models
            .iter()
            .map(|m| {
                let cells = appliances
                    .iter()
                    .map(|a| match lookup.get(&(m.as_str(), a.as_str())) {
                        Some(e) => Cell::Computed {
                            f_measure: e.metrics.f_measure,
                            undefined: e.metrics.undefined,
                        },
                        None => Cell::Missing,
                    })
                    .collect();
                (format!("F_M {m}"), cells)
            })
            .collect();
        if with_reference {
            let published = published_results();
            let mut ref_models: Vec<String> = Vec::new();
            for r in published.iter().filter(|r| r.house == house) {
                if !ref_models.contains(&r.model) {
                    ref_models.push(r.model.clone());
                }
            }
            for m in ref_models {
                let cells: Vec<Cell> = appliances
                    .iter()
                    .map(|a| {
                        published
                            .iter()
                            .find(|r| r.house == house && r.model == m && &r.appliance == a)
                            .map_or(Cell::Missing, |r| Cell::Reference(r.f_measure))
                    })
                    .collect();
                if cells.iter().any(|c| *c != Cell::Missing) {
                    rows.push((format!("F_M {m} (ref)"), cells));
                }
            }
        }
        ComparisonTable {
            house,
            appliances,
            rows,
        }
    }

    pub fn to_text(&self, with_reference: bool) -> String {
        self.houses()
            .into_iter()
            .map(|h| self.table(h, with_reference).to_text())
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// One CSV line per entry with counts and all three metrics.
    pub fn to_detail_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "house",
            "appliance",
            "model",
            "tp",
            "fp",
            "fn",
            "tn",
            "precision",
            "recall",
            "f_measure",
            "undefined",
        ])
        .expect("in-memory write");
        for e in &self.entries {
            w.write_record([
                e.house.to_string(),
                e.appliance.clone(),
                e.model.clone(),
                e.counts.tp.to_string(),
                e.counts.fp.to_string(),
                e.counts.fn_.to_string(),
                e.counts.tn.to_string(),
                fmt_value(e.metrics.precision),
                fmt_value(e.metrics.recall),
                fmt_value(e.metrics.f_measure),
                e.metrics.undefined.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_csv(&self, with_reference: bool) -> String {
        self.houses()
            .into_iter()
            .map(|h| self.table(h, with_reference).to_csv())
            .collect::<Vec<_>>()
            .join("")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("metrics report: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
