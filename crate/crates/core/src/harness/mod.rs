//! Experiment driver: synthetic and real-data protocols, report emission.
//!
//! Every random choice is drawn from a [`SeedTree`] rooted at the master
//! seed and keyed by experiment name, setting, target index and stage, so
//! rows are reproducible independently of the worker count.

mod aia_eval;
mod config;
mod grid;
pub mod loaders;
mod realdata;
mod report;
mod synthetic;

pub use config::{ExperimentConfig, ExperimentKind};
pub use loaders::{load_dataset, synthetic_standin, LoadedData, LoaderName, LoaderOptions};
pub use report::{ci_half_width, summarize, AuxTable, GroupSummary, ReportRow, RunReport, REPORT_HEADER};

use std::collections::BTreeMap;
use std::time::Instant;

use crate::attacks::{AttackOutcome, AttackParams};
use crate::copula::{phi_inv, sample_copula, Dataset, Marginal, ThresholdRule};
use crate::corrmat::CorrMatrix;
use crate::error::{Error, Result};
use crate::models::{train, Model, ModelKind, TrainConfig};
use crate::rng::{stage, SeedTree};

pub(crate) const MODEL_LESS: &str = "model_less";
pub(crate) const MODEL_BASED: &str = "model_based";

/// Rows, auxiliary tables and scalar aggregates produced by one experiment.
#[derive(Default)]
pub(crate) struct Output {
    pub rows: Vec<ReportRow>,
    pub aux: Vec<AuxTable>,
    pub extra: BTreeMap<String, f64>,
}

/// Runs the configured experiment on a pool of `cfg.workers` threads.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let root = SeedTree::new(cfg.seed).named(cfg.experiment.name());
    let out = pool.install(|| match cfg.experiment {
        ExperimentKind::Grid => grid::run_grid(cfg, &root),
        ExperimentKind::IncreasingN => synthetic::run_increasing_n(cfg, &root),
        ExperimentKind::MitigationQueries | ExperimentKind::MitigationPrecision => {
            synthetic::run_mitigations(cfg, &root)
        }
        ExperimentKind::ExtractConstraints => synthetic::run_extract_constraints(cfg, &root),
        ExperimentKind::RealData => realdata::run_real_data(cfg, &root),
        ExperimentKind::Aia => aia_eval::run_aia(cfg, &root),
    })?;
    Ok(RunReport {
        config: cfg.clone(),
        rows: out.rows,
        aux: out.aux,
        extra: out.extra,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// A trained synthetic target.
pub(crate) struct Target {
    pub truth: CorrMatrix,
    pub data: Dataset,
    pub model: Model,
}

impl Target {
    /// Empirical `ρ(X_1, X_2)` of the training data.
    pub fn c12(&self) -> Result<f64> {
        self.data.corr(0, 1)
    }
}

/// Draws data from `truth` and trains a target on it, under `node`.
pub(crate) fn train_target(
    truth: CorrMatrix,
    marginals: &[Marginal],
    m: usize,
    rule: ThresholdRule,
    kind: ModelKind,
    node: &SeedTree,
) -> Result<Target> {
    let mut rng = node.child(stage::TARGET_DATA).stream();
    // Redraw until both classes and non-constant inputs are present.
    for _ in 0..100 {
        let data = sample_copula(&truth, marginals, m, rule, &mut rng)?;
        if !data.has_both_classes() || data.corr(0, 1).is_err() {
            continue;
        }
        let tc = TrainConfig::default().with_seed(node.child(stage::TARGET_TRAIN).seed_u64());
        let model = train(kind, &data, &tc)?;
        return Ok(Target { truth, data, model });
    }
    Err(Error::SingleClass)
}

/// Shadow-attack parameters for `n` variables under this config.
pub(crate) fn attack_params(cfg: &ExperimentConfig, n: usize, b: usize, m: usize, rule: ThresholdRule) -> AttackParams {
    let mut p = AttackParams::desk(cfg.model);
    p.k = cfg.k_for(n);
    p.q = cfg.q;
    p.b = b;
    p.dataset_size = m;
    p.threshold = rule;
    p
}

/// The attack's guess; when every shadow falls in one bin that bin is the guess.
pub(crate) fn guessed_bin(r: Result<AttackOutcome>) -> Result<usize> {
    match r {
        Ok(o) => Ok(o.predicted_bin),
        Err(Error::DegenerateLabels(b)) if b > 0 => Ok(b),
        Err(e) => Err(e),
    }
}

/// Latent threshold reproducing the label balance of `data`.
pub(crate) fn balance_rule(data: &Dataset) -> Result<ThresholdRule> {
    let ones = data.labels().iter().filter(|&&y| y == 1).count() as f64;
    let p1 = ones / data.m() as f64;
    Ok(ThresholdRule::Fixed(phi_inv(1.0 - p1)?))
}

/// Point-biserial correlation of every input with the label.
pub(crate) fn label_constraints(data: &Dataset) -> Result<Vec<f64>> {
    let y: Vec<f64> = data.labels().iter().map(|&l| f64::from(l)).collect();
    (0..data.d())
        .map(|j| crate::copula::pearson(&data.column(j), &y).ok_or(Error::ZeroVariance { column: j }))
        .collect()
}
