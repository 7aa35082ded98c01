use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::loaders::{LoaderName, LoaderOptions};
use crate::aia::AiaParams;
use crate::attacks::FeatureMode;
use crate::copula::ThresholdRule;
use crate::corrmat::ScenarioKind;
use crate::error::{Error, Result};
use crate::models::ModelKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Grid,
    IncreasingN,
    MitigationQueries,
    MitigationPrecision,
    RealData,
    Aia,
    ExtractConstraints,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Grid => "grid",
            ExperimentKind::IncreasingN => "increasing_n",
            ExperimentKind::MitigationQueries => "mitigation_queries",
            ExperimentKind::MitigationPrecision => "mitigation_precision",
            ExperimentKind::RealData => "real_data",
            ExperimentKind::Aia => "aia",
            ExperimentKind::ExtractConstraints => "extract_constraints",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map_err(|_| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Everything an experiment run depends on. Missing JSON fields take the
/// desk-scale defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Number of variables including the label.
    pub n: usize,
    /// Values of `n` swept by `increasing_n`; empty means `[n]`.
    pub ns: Vec<usize>,
    pub scenario: ScenarioKind,
    /// Number of bins.
    pub b: usize,
    /// Bin counts evaluated by `real_data`.
    pub bs: Vec<usize>,
    /// Shadow models per attack.
    pub k: usize,
    /// Queries per model.
    pub q: usize,
    /// Targets (`T'`), data collections or trials; `None` picks a per-experiment default.
    pub targets: Option<usize>,
    pub model: ModelKind,
    /// Records per synthetic target and shadow dataset.
    pub dataset_size: usize,
    pub out: Option<PathBuf>,

    /// Grid cells per axis.
    pub resolution: usize,
    /// Model-less targets per grid cell.
    pub targets_per_cell: usize,
    /// Randomly chosen grid cells evaluated with the model-based attack.
    pub model_based_cells: usize,
    /// Explicit `(ρ(X_1, Y), ρ(X_2, Y))` cells for the model-based grid.
    pub cells: Vec<(f64, f64)>,
    pub folds: usize,

    /// Query counts swept by `mitigation_queries`.
    pub queries: Vec<usize>,
    /// Precision levels swept by `mitigation_precision`.
    pub precisions: Vec<FeatureMode>,

    /// Probe counts swept by `extract_constraints`.
    pub q_tildes: Vec<usize>,

    pub aia: AiaParams,
    pub records_per_target: usize,
    /// Minimum `|ρ(X_i, X_j)|` between inputs of synthetic AIA targets.
    pub min_pair_corr: f64,

    pub loader: Option<LoaderName>,
    pub dataset: Option<PathBuf>,
    pub loader_options: LoaderOptions,
    /// Records of the synthetic stand-in when no dataset file is given.
    pub standin_records: usize,
    pub standin_inputs: usize,
    /// Sub-intervals of fitted marginals.
    pub g: usize,
    /// Label rule of synthetic targets.
    pub threshold: ThresholdRule,

    pub workers: Option<usize>,
    pub paper_scale: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::IncreasingN,
            seed: 0,
            n: 3,
            ns: Vec::new(),
            scenario: ScenarioKind::S2,
            b: 3,
            bs: vec![3, 5],
            k: 1000,
            q: 100,
            targets: None,
            model: ModelKind::Lr,
            dataset_size: 1000,
            out: None,
            resolution: 200,
            targets_per_cell: 100,
            model_based_cells: 0,
            cells: Vec::new(),
            folds: 5,
            queries: vec![1, 5, 10, 50, 100],
            precisions: vec![
                FeatureMode::Full,
                FeatureMode::Rounded(4),
                FeatureMode::Rounded(2),
                FeatureMode::Rounded(1),
                FeatureMode::LabelOnly,
            ],
            q_tildes: vec![10, 50, 100, 500, 1000],
            aia: AiaParams::default(),
            records_per_target: 50,
            min_pair_corr: 0.5,
            loader: None,
            dataset: None,
            loader_options: LoaderOptions::default(),
            standin_records: 2000,
            standin_inputs: 8,
            g: 100,
            threshold: ThresholdRule::Zero,
            workers: None,
            paper_scale: false,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Targets per setting, or the experiment's default.
    pub fn targets(&self) -> usize {
        self.targets.unwrap_or(match (self.experiment, self.paper_scale) {
            (ExperimentKind::Grid, false) => 200,
            (ExperimentKind::Grid, true) => 1500,
            (ExperimentKind::RealData, _) => 100,
            (ExperimentKind::Aia, false) => 4,
            (ExperimentKind::Aia, true) => 1000,
            (ExperimentKind::ExtractConstraints, _) => 100,
            (_, false) => 200,
            (_, true) => 1000,
        })
    }

    /// Shadow models for targets with `n` variables.
    pub fn k_for(&self, n: usize) -> usize {
        if self.paper_scale {
            if n <= 5 {
                5000
            } else {
                10_000
            }
        } else {
            self.k
        }
    }

    pub fn n_values(&self) -> Vec<usize> {
        if self.ns.is_empty() {
            vec![self.n]
        } else {
            self.ns.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.k == 0 || self.q == 0 || self.targets == Some(0) {
            return bad("K, Q and the target count must be at least 1");
        }
        if self.resolution < 2 {
            return bad("grid resolution must be at least 2");
        }
        if self.b < 2 || self.bs.iter().any(|&b| b < 2) {
            return bad("at least two bins are required");
        }
        if self.n_values().iter().any(|&n| !(3..=10).contains(&n)) {
            return bad("n must lie in 3..=10");
        }
        if self.experiment == ExperimentKind::Grid && self.n != 3 {
            return bad("the grid experiment requires n = 3");
        }
        if self.experiment == ExperimentKind::Aia && self.n < 3 {
            return bad("attribute inference needs at least two inputs");
        }
        if self.folds < 2 {
            return bad("cross-validation needs at least two folds");
        }
        let has_cells = self.model_based_cells > 0 || !self.cells.is_empty();
        if self.experiment == ExperimentKind::Grid && has_cells && self.targets() < self.folds {
            return bad("model-based grid cells need at least as many targets as folds");
        }
        if self.dataset_size < 10 {
            return bad("datasets need at least 10 records");
        }
        if self.queries.contains(&0) || self.q_tildes.iter().any(|&q| q < 10) {
            return bad("query counts must be positive and probe counts at least 10");
        }
        if !(0.0..1.0).contains(&self.min_pair_corr) {
            return bad("min_pair_corr must lie in [0, 1)");
        }
        if self.g == 0 || self.aia.g == 0 || self.aia.s_prime == 0 {
            return bad("G and S' must be positive");
        }
        if !(self.aia.m_init > 0.0 && self.aia.delta > 0.0) {
            return bad("AIA resolutions must be positive");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_and_round_trip() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "grid", "resolution": 10}"#).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Grid);
        assert_eq!(cfg.resolution, 10);
        assert_eq!(cfg.k, 1000);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"resolution": 1}"#,
            r#"{"k": 0}"#,
            r#"{"experiment": "grid", "n": 4}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"experiment": "nope"}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn paper_scale_restores_sizes() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::IncreasingN);
        assert_eq!((cfg.k_for(3), cfg.targets()), (1000, 200));
        cfg.paper_scale = true;
        assert_eq!((cfg.k_for(5), cfg.k_for(6), cfg.targets()), (5000, 10_000, 1000));
        assert_eq!("mitigation-queries".parse::<ExperimentKind>().unwrap(), ExperimentKind::MitigationQueries);
    }
}
