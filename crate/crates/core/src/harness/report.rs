use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::corrmat::fmt17;
use crate::error::Result;

pub const REPORT_HEADER: [&str; 9] = [
    "setting",
    "target",
    "method",
    "constraints",
    "truth",
    "true_bin",
    "predicted_bin",
    "estimate",
    "correct",
];

/// One guess of one method against one target.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub setting: String,
    pub target: usize,
    pub method: String,
    pub constraints: Vec<f64>,
    /// True value of the inferred quantity.
    pub truth: f64,
    pub true_bin: usize,
    pub predicted_bin: usize,
    /// Raw estimate, for methods that produce one.
    pub estimate: Option<f64>,
}

impl ReportRow {
    pub fn correct(&self) -> bool {
        self.true_bin == self.predicted_bin
    }

    fn record(&self) -> [String; 9] {
        let constraints: Vec<String> = self.constraints.iter().map(|&v| fmt17(v)).collect();
        [
            self.setting.clone(),
            self.target.to_string(),
            self.method.clone(),
            constraints.join(";"),
            fmt17(self.truth),
            self.true_bin.to_string(),
            self.predicted_bin.to_string(),
            self.estimate.map(fmt17).unwrap_or_default(),
            u8::from(self.correct()).to_string(),
        ]
    }
}

/// Half-width of the normal-approximation 95% interval of a proportion.
pub fn ci_half_width(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Accuracy of one method in one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub setting: String,
    pub method: String,
    pub targets: usize,
    pub accuracy: f64,
    pub ci95: f64,
}

/// Aggregates rows by `(setting, method)`, in order of first appearance.
pub fn summarize(rows: &[ReportRow]) -> Vec<GroupSummary> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut counts: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for r in rows {
        let key = (r.setting.clone(), r.method.clone());
        let e = counts.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (0, 0)
        });
        e.0 += 1;
        e.1 += usize::from(r.correct());
    }
    order
        .into_iter()
        .map(|key| {
            let (n, hits) = counts[&key];
            let accuracy = hits as f64 / n as f64;
            GroupSummary {
                setting: key.0,
                method: key.1,
                targets: n,
                accuracy,
                ci95: ci_half_width(accuracy, n),
            }
        })
        .collect()
}

/// A named auxiliary table written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl AuxTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Result of one experiment run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub aux: Vec<AuxTable>,
    /// Experiment-specific aggregates that are not row accuracies.
    pub extra: BTreeMap<String, f64>,
    pub wall_clock_secs: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    experiment: &'a str,
    seed: u64,
    groups: Vec<GroupSummary>,
    extra: &'a BTreeMap<String, f64>,
    wall_clock_secs: f64,
    config: &'a ExperimentConfig,
}

impl RunReport {
    pub fn summary(&self) -> Vec<GroupSummary> {
        summarize(&self.rows)
    }

    /// Accuracy of `method` over all settings.
    pub fn accuracy(&self, method: &str) -> Option<f64> {
        let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.method == method).collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().filter(|r| r.correct()).count() as f64 / rows.len() as f64)
    }

    /// Accuracy of `method` within `setting`.
    pub fn group(&self, setting: &str, method: &str) -> Option<GroupSummary> {
        self.summary()
            .into_iter()
            .find(|g| g.setting == setting && g.method == method)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            wtr.write_record(r.record())?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SummaryFile {
            experiment: self.config.experiment.name(),
            seed: self.config.seed,
            groups: self.summary(),
            extra: &self.extra,
            wall_clock_secs: self.wall_clock_secs,
            config: &self.config,
        })?)
    }

    /// Writes `report.csv`, `summary.json` and one CSV per auxiliary table.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_csv(fs::File::create(dir.join("report.csv"))?)?;
        fs::write(dir.join("summary.json"), self.summary_json()?)?;
        for t in &self.aux {
            let mut wtr = csv::Writer::from_path(dir.join(format!("{}.csv", t.name)))?;
            wtr.write_record(&t.header)?;
            for r in &t.rows {
                wtr.write_record(r)?;
            }
            wtr.flush()?;
        }
        Ok(())
    }
}
