//! Shadow-model attack.
//!
//! Shadow datasets are drawn from matrices satisfying the attacker's
//! constraints, one shadow model is trained on each, and a meta-classifier
//! learns to map the shadows' outputs on a shared query set to the bin of
//! their training data's target correlation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bins::{BinSpec, Interval};
use super::features::{extract_features, FeatureMode};
use super::meta::{train_meta, MetaConfig, MetaDataset};
use crate::copula::{sample_copula, shift_scenario, Dataset, Marginal, ShiftOutcome, ShiftParams, ThresholdRule};
use crate::corrmat::Scenario;
use crate::error::{Error, Result};
use crate::models::{train, Model, ModelKind, TrainConfig};
use crate::rng::{stage, SeedTree};

/// What is fed to the meta-classifier for each model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// Outputs on the query set.
    #[default]
    Confidence,
    /// Raw flattened parameters.
    Weights,
    /// Parameters after sorting hidden neurons.
    CanonicalWeights,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    /// Number of shadow models.
    pub k: usize,
    /// Number of queries.
    pub q: usize,
    /// Number of bins.
    pub b: usize,
    pub model_kind: ModelKind,
    pub train: TrainConfig,
    pub meta: MetaConfig,
    /// Records per shadow dataset; should equal the target's.
    pub dataset_size: usize,
    pub threshold: ThresholdRule,
    pub mode: FeatureMode,
    pub source: FeatureSource,
    /// Used when some marginal is not standard normal.
    pub shift: Option<ShiftParams>,
}

impl AttackParams {
    /// `K = 5000` for `n <= 5` and `10000` above, `Q = 100`, `B = 3`.
    pub fn paper(n: usize, model_kind: ModelKind) -> Self {
        let k = if n <= 5 { 5000 } else { 10_000 };
        Self::with_k(k, model_kind)
    }

    /// Reduced `K = 1000` for desk-scale runs.
    pub fn desk(model_kind: ModelKind) -> Self {
        Self::with_k(1000, model_kind)
    }

    fn with_k(k: usize, model_kind: ModelKind) -> Self {
        Self {
            k,
            q: 100,
            b: 3,
            model_kind,
            train: TrainConfig::default(),
            meta: MetaConfig::for_target(model_kind),
            dataset_size: 1000,
            threshold: ThresholdRule::Zero,
            mode: FeatureMode::Full,
            source: FeatureSource::Confidence,
            shift: Some(ShiftParams::default()),
        }
    }

    pub fn bins(&self) -> Result<BinSpec> {
        BinSpec::new(self.b)
    }
}

/// Trained shadow models with their labels and the shared query set.
pub struct ShadowEnsemble {
    /// Surviving shadows: `(index, model, empirical target correlation)`.
    pub shadows: Vec<(usize, Model, f64)>,
    pub query: Dataset,
    /// Scenario the shadows were generated from (shifted if applicable).
    pub generator: Scenario,
    pub shift: Option<ShiftOutcome>,
}

impl ShadowEnsemble {
    /// Builds `params.k` shadows and a query set of `query_size` records.
    pub fn build(
        scenario: &Scenario,
        marginals: &[Marginal],
        params: &AttackParams,
        query_size: usize,
        tree: &SeedTree,
    ) -> Result<Self> {
        scenario.validate()?;
        if marginals.len() != scenario.n() {
            return Err(Error::ShapeMismatch {
                expected: scenario.n(),
                actual: marginals.len(),
            });
        }
        let needs_shift = marginals.iter().any(|m| !m.is_standard_normal());
        let (generator, shift) = match (&params.shift, needs_shift) {
            (Some(sp), true) => {
                let sp = ShiftParams {
                    n_d: params.dataset_size,
                    threshold: params.threshold,
                    ..sp.clone()
                };
                let out = shift_scenario(scenario, marginals, &sp, &tree.child(stage::SHIFT))?;
                (scenario.with_values(&out.values), Some(out))
            }
            _ => (scenario.clone(), None),
        };

        let mut qrng = tree.child(stage::QUERY).stream();
        let qc = generator.sample(&mut qrng)?;
        let query = sample_copula(&qc, marginals, query_size, params.threshold, &mut qrng)?;

        let base = tree.child(stage::SHADOW);
        let results: Vec<Result<Option<(usize, Model, f64)>>> = (0..params.k)
            .into_par_iter()
            .map(|k| {
                let node = base.child(k as u64);
                let mut rng = node.child(stage::SHADOW_DATA).stream();
                let c = generator.sample(&mut rng)?;
                let data =
                    sample_copula(&c, marginals, params.dataset_size, params.threshold, &mut rng)?;
                if !data.has_both_classes() {
                    return Ok(None);
                }
                let Ok(c12) = data.corr(0, 1) else {
                    return Ok(None);
                };
                let cfg = params.train.with_seed(node.child(stage::SHADOW_TRAIN).seed_u64());
                let model = train(params.model_kind, &data, &cfg)?;
                Ok(Some((k, model, c12)))
            })
            .collect();
        let mut shadows = Vec::with_capacity(params.k);
        for r in results {
            if let Some(s) = r? {
                shadows.push(s);
            }
        }
        Ok(Self {
            shadows,
            query,
            generator,
            shift,
        })
    }

    /// Features of one model under the given view of the query set.
    pub fn features(&self, model: &Model, source: FeatureSource, mode: FeatureMode, q: usize) -> Result<Vec<f64>> {
        match source {
            FeatureSource::Confidence => {
                let q = q.min(self.query.m());
                let idx: Vec<usize> = (0..q).collect();
                extract_features(model, &self.query.subset(&idx), mode)
            }
            FeatureSource::Weights => Ok(model.flatten_weights()),
            FeatureSource::CanonicalWeights => Ok(model.canonical_weights()),
        }
    }

    pub fn meta_dataset(
        &self,
        spec: BinSpec,
        source: FeatureSource,
        mode: FeatureMode,
        q: usize,
    ) -> Result<MetaDataset> {
        let mut out: Option<MetaDataset> = None;
        for (_, model, c12) in &self.shadows {
            let f = self.features(model, source, mode, q)?;
            out.get_or_insert_with(|| MetaDataset::new(f.len()))
                .push(&f, spec.bin_of(*c12)?);
        }
        out.ok_or(Error::DegenerateLabels(0))
    }

    /// Trains a meta-classifier on this ensemble and applies it to `target`.
    pub fn attack(
        &self,
        target: &Model,
        params: &AttackParams,
        mode: FeatureMode,
        q: usize,
        tree: &SeedTree,
    ) -> Result<AttackOutcome> {
        let spec = params.bins()?;
        let meta = self.meta_dataset(spec, params.source, mode, q)?;
        let fit = train_meta(&meta, spec.b, &params.meta, &tree.child(stage::META))?;
        let f = self.features(target, params.source, mode, q)?;
        Ok(AttackOutcome {
            predicted_bin: fit.classifier.predict(&f),
            meta_holdout_acc: fit.holdout_accuracy,
            shadows_used: self.shadows.len(),
            shift_gap: self.shift.as_ref().map(|s| s.gap),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub predicted_bin: usize,
    pub meta_holdout_acc: f64,
    pub shadows_used: usize,
    pub shift_gap: Option<f64>,
}

/// Full shadow-model attack against one target.
pub fn run_model_based_attack(
    target: &Model,
    scenario: &Scenario,
    marginals: &[Marginal],
    params: &AttackParams,
    tree: &SeedTree,
) -> Result<AttackOutcome> {
    let ensemble = ShadowEnsemble::build(scenario, marginals, params, params.q, tree)?;
    ensemble.attack(target, params, params.mode, params.q, tree)
}

/// Range of the target entry over `k_samples` draws of the scenario's sampler.
pub fn empirical_interval<R: Rng + ?Sized>(scenario: &Scenario, k_samples: usize, rng: &mut R) -> Result<Interval> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..k_samples.max(1) {
        let v = scenario.sample(rng)?.get(0, 1);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Interval::new(lo, hi)
}

/// JSON summary of one attack run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: Scenario,
    pub params: AttackParams,
    pub predicted_bin: usize,
    pub true_bin: Option<usize>,
    pub meta_holdout_acc: f64,
    pub interval: Interval,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::bins::closed_form_interval;
    use crate::corrmat::ScenarioKind;
    use crate::rng::Stream;
    use rand::SeedableRng;

    #[test]
    fn empirical_interval_approaches_closed_form() {
        let mut rng = Stream::seed_from_u64(1);
        let s = Scenario::S1 {
            n: 3,
            rho1: 0.5,
            rho2: 0.5,
        };
        let iv = empirical_interval(&s, 5000, &mut rng).unwrap();
        assert!((-0.5..=-0.48).contains(&iv.lo), "{iv:?}");
        assert!((0.98..=1.0).contains(&iv.hi), "{iv:?}");
        let cf = closed_form_interval(0.5, 0.5);
        assert!(iv.lo >= cf.lo - 1e-12 && iv.hi <= cf.hi + 1e-12);
    }

    #[test]
    fn empirical_interval_s3_zero_and_s2_inside_bin() {
        let mut rng = Stream::seed_from_u64(2);
        let s = Scenario::from_truth(ScenarioKind::S3, &crate::corrmat::CorrMatrix::identity(4));
        let iv = empirical_interval(&s, 5000, &mut rng).unwrap();
        assert!(iv.lo < -0.98 && iv.hi > 0.98);
        let s = Scenario::S2 {
            constraints: vec![0.95, 0.9],
        };
        let iv = empirical_interval(&s, 2000, &mut rng).unwrap();
        assert!(iv.lo > 1.0 / 3.0);
    }

    #[test]
    fn smoke_attack_returns_a_bin() {
        let tree = SeedTree::new(3);
        let s = Scenario::S1 {
            n: 3,
            rho1: 0.6,
            rho2: 0.6,
        };
        let margs = vec![Marginal::StandardNormal; 3];
        let mut params = AttackParams::desk(ModelKind::Lr);
        params.k = 50;
        params.dataset_size = 200;
        let mut rng = tree.named("target").stream();
        let c = s.sample(&mut rng).unwrap();
        let data = sample_copula(&c, &margs, 200, ThresholdRule::Zero, &mut rng).unwrap();
        let target = train(ModelKind::Lr, &data, &params.train).unwrap();
        let out = run_model_based_attack(&target, &s, &margs, &params, &tree).unwrap();
        assert!((1..=3).contains(&out.predicted_bin));
        let again = run_model_based_attack(&target, &s, &margs, &params, &tree).unwrap();
        assert_eq!(out, again);
    }
}
