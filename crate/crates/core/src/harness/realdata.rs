use rand::seq::index;
use rand::Rng;

use super::loaders::{load_dataset, LoaderName};
use super::{attack_params, balance_rule, guessed_bin, label_constraints, ExperimentConfig, Output, ReportRow, MODEL_BASED, MODEL_LESS};
use crate::attacks::{model_less_predict, BinSpec, Interval, ShadowEnsemble};
use crate::copula::{fit_marginal, Marginal};
use crate::corrmat::Scenario;
use crate::error::{Error, Result};
use crate::models::{train, TrainConfig};
use crate::rng::{stage, SeedTree};

/// An unordered pair `{a, b}` (returned as `a < b`) and a third column,
/// uniform over all such triplets.
pub(crate) fn sample_triplet<R: Rng + ?Sized>(d: usize, rng: &mut R) -> [usize; 3] {
    let pair = index::sample(rng, d, 2);
    let (a, b) = (pair.index(0).min(pair.index(1)), pair.index(0).max(pair.index(1)));
    let mut c = rng.random_range(0..d - 2);
    for skip in [a, b] {
        if c >= skip {
            c += 1;
        }
    }
    [a, b, c]
}

/// Data collections of `n = 4` columns from a real (or stand-in) dataset;
/// both attacks under S2 with fitted marginals, for every bin count.
pub(crate) fn run_real_data(cfg: &ExperimentConfig, root: &SeedTree) -> Result<Output> {
    let loader = cfg.loader.unwrap_or(LoaderName::Synthetic);
    let loaded = load_dataset(
        loader,
        cfg.dataset.as_deref(),
        &cfg.loader_options,
        (cfg.standin_records, cfg.standin_inputs),
        &root.named("data"),
    )?;
    let d = loaded.data.d();
    if d < 3 {
        return Err(Error::Schema(format!("need at least 3 input columns, found {d}")));
    }
    let specs: Vec<BinSpec> = cfg.bs.iter().map(|&b| BinSpec::new(b)).collect::<Result<_>>()?;
    let mut out = Output::default();
    for t in 0..cfg.targets() {
        let node = root.child(t as u64);
        let cols = sample_triplet(d, &mut node.named("columns").stream());
        let data = loaded.data.select_inputs(&cols);
        let c12 = data.corr(0, 1)?;
        let constraints = label_constraints(&data)?;
        let mut margs: Vec<Marginal> = (0..3).map(|j| fit_marginal(&data.column(j), cfg.g)).collect::<Result<_>>()?;
        margs.push(Marginal::StandardNormal);
        let rule = balance_rule(&data)?;
        let tc = TrainConfig::default().with_seed(node.child(stage::TARGET_TRAIN).seed_u64());
        let model = train(cfg.model, &data, &tc)?;
        let scenario = Scenario::S2 {
            constraints: constraints.clone(),
        };
        let iv = Interval::of_scenario(&scenario)?;
        let mut params = attack_params(cfg, 4, cfg.b, data.m(), rule);
        let tree = node.named("attack");
        let ens = ShadowEnsemble::build(&scenario, &margs, &params, cfg.q, &tree)?;
        let mut ml_rng = node.child(stage::MODEL_LESS).stream();
        for spec in &specs {
            params.b = spec.b;
            let true_bin = spec.bin_of(c12)?;
            let setting = format!("b={}", spec.b);
            let mb = guessed_bin(ens.attack(&model, &params, params.mode, cfg.q, &tree))?;
            let base = ReportRow {
                setting,
                target: t,
                method: MODEL_LESS.into(),
                constraints: constraints.clone(),
                truth: c12,
                true_bin,
                predicted_bin: model_less_predict(&iv, *spec, &mut ml_rng),
                estimate: None,
            };
            out.rows.push(base.clone());
            out.rows.push(ReportRow {
                method: MODEL_BASED.into(),
                predicted_bin: mb,
                ..base
            });
        }
    }
    out.extra.insert("records".into(), loaded.data.m() as f64);
    out.extra.insert("inputs".into(), d as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn triplets_are_uniform() {
        let mut rng = SeedTree::new(4).stream();
        let mut counts: HashMap<[usize; 3], usize> = HashMap::new();
        let draws = 60_000;
        for _ in 0..draws {
            let t = sample_triplet(4, &mut rng);
            assert!(t[0] < t[1] && t[2] != t[0] && t[2] != t[1]);
            *counts.entry(t).or_default() += 1;
        }
        // 6 pairs × 2 thirds.
        assert_eq!(counts.len(), 12);
        for &c in counts.values() {
            assert!((c as f64 - draws as f64 / 12.0).abs() < 300.0, "{c}");
        }
    }
}
