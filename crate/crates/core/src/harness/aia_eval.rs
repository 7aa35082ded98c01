use rand::seq::index;
use rayon::prelude::*;

use super::loaders::standin_marginals;
use super::{
    attack_params, balance_rule, guessed_bin, label_constraints, train_target, AuxTable, ExperimentConfig, Output,
    ReportRow, MODEL_BASED,
};
use crate::aia::{
    build_paired_pools, confusion_matrix, csmia_aia, fredrikson_aia, marginal_prior, match_record, tertile_bin,
    tertiles, AiaParams, PairBin, PartialRecord, SynthPool,
};
use crate::attacks::{BinSpec, ShadowEnsemble};
use crate::copula::{fit_marginal, Marginal, ThresholdRule};
use crate::corrmat::{fmt17, invert_permutation, sample_corr_matrix, CorrMatrix, Scenario};
use crate::error::{Error, Result};
use crate::rng::{stage, SeedTree};

pub(crate) const AIA_METHODS: [&str; 5] = ["ci_aia", "copula_shifted", "marginal_prior", "fredrikson", "csmia"];

/// Input pairs `(i, j)`, `i < j`.
fn input_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect()
}

/// A random matrix whose input–input correlations all have magnitude at
/// least `min`.
fn strong_pairs_matrix(n: usize, min: f64, tree: &SeedTree) -> Result<CorrMatrix> {
    let mut rng = tree.child(stage::TARGET_MATRIX).stream();
    for _ in 0..1_000_000 {
        let c = sample_corr_matrix(n, &mut rng);
        if input_pairs(n - 1).iter().all(|&(i, j)| c.get(i, j).abs() >= min) {
            return Ok(c);
        }
    }
    Err(Error::Config(format!("no matrix with input correlations of magnitude >= {min} found")))
}

/// Estimate from the filtered pool, or the unfiltered one if the filtered
/// pool lacks the record's label.
fn ci_estimate(
    filtered: &SynthPool,
    unfiltered: &SynthPool,
    rec: &PartialRecord,
    margs: &[Marginal],
    params: &AiaParams,
) -> Result<f64> {
    match match_record(&filtered.data, rec, margs, params) {
        Err(Error::MissingLabel(_)) => match_record(&unfiltered.data, rec, margs, params),
        other => other,
    }
}

/// Attribute inference on synthetic targets with strongly correlated inputs.
///
/// Per target, the correlation attack is run once per input pair (pair
/// moved to the front) to get the inferred bin and shifted constraints;
/// all methods are then evaluated on the same sampled training records.
pub(crate) fn run_aia(cfg: &ExperimentConfig, root: &SeedTree) -> Result<Output> {
    let n = cfg.n;
    let d = n - 1;
    let spec = BinSpec::new(3)?;
    let mut out = Output::default();
    let mut table = AuxTable::new("aia", &["method", "record_id", "truth_bin", "predicted_bin", "estimate"]);
    let mut fallbacks = 0usize;
    let mut survivors = 0usize;
    let records = cfg.records_per_target;
    for t in 0..cfg.targets() {
        let node = root.child(t as u64);
        let truth = strong_pairs_matrix(n, cfg.min_pair_corr, &node)?;
        let mut gen_margs = standin_marginals(d)?;
        gen_margs.push(Marginal::StandardNormal);
        let target = train_target(truth, &gen_margs, cfg.dataset_size, ThresholdRule::Median, cfg.model, &node)?;
        let data = &target.data;
        let constraints = label_constraints(data)?;
        let mut margs: Vec<Marginal> = (0..d).map(|j| fit_marginal(&data.column(j), cfg.g)).collect::<Result<_>>()?;
        margs.push(Marginal::StandardNormal);
        let rule = balance_rule(data)?;
        let params = attack_params(cfg, n, 3, data.m(), rule);

        let mut bins = Vec::new();
        let mut shifted = Vec::new();
        for (p, &(i, j)) in input_pairs(d).iter().enumerate() {
            let mut perm = vec![i, j];
            perm.extend((0..d).filter(|&k| k != i && k != j));
            let v: Vec<f64> = perm.iter().map(|&k| constraints[k]).collect();
            let mut pm: Vec<Marginal> = perm.iter().map(|&k| margs[k].clone()).collect();
            pm.push(Marginal::StandardNormal);
            let scenario = Scenario::S2 { constraints: v.clone() };
            let tree = node.named("pair").child(p as u64);
            let ens = ShadowEnsemble::build(&scenario, &pm, &params, cfg.q, &tree)?;
            let model = target.model.permute_inputs(&perm);
            let bin = guessed_bin(ens.attack(&model, &params, params.mode, cfg.q, &tree))?;
            let pv = ens.shift.as_ref().map_or(v, |s| s.values.clone());
            let inv = invert_permutation(&perm);
            shifted.push((0..d).map(|k| pv[inv[k]]).collect::<Vec<f64>>());
            let c = data.corr(i, j)?;
            out.rows.push(ReportRow {
                setting: "pairs".into(),
                target: t,
                method: MODEL_BASED.into(),
                constraints: constraints.clone(),
                truth: c,
                true_bin: spec.bin_of(c)?,
                predicted_bin: bin,
                estimate: None,
            });
            bins.push(PairBin { i, j, bin });
        }
        let v_avg = crate::aia::average_constraints(&shifted);

        let aia = AiaParams {
            dataset_size: data.m(),
            threshold: rule,
            ..cfg.aia.clone()
        };
        let (filtered, unfiltered) = build_paired_pools(&v_avg, &margs, &bins, spec, &aia, &node.named("pool"))?;
        fallbacks += usize::from(filtered.fallback);
        survivors += filtered.survivors;

        let f1 = &margs[0];
        let cuts = tertiles(f1)?;
        let conf = confusion_matrix(&target.model, data);
        let picks = index::sample(&mut node.named("records").stream(), data.m(), records.min(data.m())).into_vec();
        let results: Vec<Result<Vec<(usize, f64, f64)>>> = picks
            .par_iter()
            .enumerate()
            .map(|(r, &idx)| {
                let (x1, rec) = PartialRecord::from_row(data.row(idx), data.labels()[idx]);
                let mut rng = node.named("record").child(r as u64).stream();
                let estimates = [
                    ci_estimate(&filtered, &unfiltered, &rec, &margs, &aia)?,
                    match_record(&unfiltered.data, &rec, &margs, &aia)?,
                    marginal_prior(f1, &mut rng),
                    fredrikson_aia(&target.model, &rec, f1, &conf, aia.g, &mut rng),
                    csmia_aia(&target.model, &rec, f1, aia.g, &mut rng),
                ];
                Ok(estimates.iter().map(|&e| (r, x1, e)).collect())
            })
            .collect();
        for res in results {
            for (method, (r, x1, est)) in AIA_METHODS.iter().zip(res?) {
                let id = t * records + r;
                let row = ReportRow {
                    setting: "aia".into(),
                    target: id,
                    method: (*method).into(),
                    constraints: v_avg.clone(),
                    truth: x1,
                    true_bin: tertile_bin(x1, cuts) + 1,
                    predicted_bin: tertile_bin(est, cuts) + 1,
                    estimate: Some(est),
                };
                table.push(vec![
                    row.method.clone(),
                    id.to_string(),
                    row.true_bin.to_string(),
                    row.predicted_bin.to_string(),
                    fmt17(est),
                ]);
                out.rows.push(row);
            }
        }
    }
    out.extra.insert("pool_fallbacks".into(), fallbacks as f64);
    out.extra.insert("mean_surviving_datasets".into(), survivors as f64 / cfg.targets() as f64);
    out.aux.push(table);
    Ok(out)
}
