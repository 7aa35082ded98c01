use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{ExperimentConfig, Output, ReportRow, MODEL_BASED, MODEL_LESS};
use crate::attacks::{closed_form_interval, fit_meta, model_less_predict, BinSpec, ShadowEnsemble};
use crate::copula::Marginal;
use crate::corrmat::{fmt17, Scenario};
use crate::error::{Error, Result};
use crate::harness::{attack_params, AuxTable};
use crate::rng::{stage, SeedTree};

/// Centre of cell `a` of `r` cells on `[-1, 1]`.
pub(crate) fn cell_centre(a: usize, r: usize) -> f64 {
    -1.0 + (a as f64 + 0.5) * 2.0 / r as f64
}

/// Cell index containing `rho`.
pub(crate) fn cell_of(rho: f64, r: usize) -> usize {
    (((rho + 1.0) * r as f64 / 2.0) as usize).min(r - 1)
}

/// Model-less accuracy of one cell: targets uniform in the closed-form
/// interval, one guess per target.
pub(crate) fn model_less_cell(rho1: f64, rho2: f64, targets: usize, spec: BinSpec, tree: &SeedTree) -> Result<f64> {
    let iv = closed_form_interval(rho1, rho2);
    let mut rng = tree.child(stage::MODEL_LESS).stream();
    let mut hits = 0usize;
    for _ in 0..targets {
        let truth = iv.lo + (iv.hi - iv.lo) * rng.random::<f64>();
        let guess = model_less_predict(&iv, spec, &mut rng);
        hits += usize::from(guess == spec.bin_of(truth)?);
    }
    Ok(hits as f64 / targets as f64)
}

pub(crate) fn run_grid(cfg: &ExperimentConfig, root: &SeedTree) -> Result<Output> {
    let r = cfg.resolution;
    let spec = BinSpec::new(cfg.b)?;
    let ml_root = root.named("model_less");
    let accs: Vec<f64> = (0..r * r)
        .into_par_iter()
        .map(|c| {
            let (a, b) = (c / r, c % r);
            model_less_cell(cell_centre(a, r), cell_centre(b, r), cfg.targets_per_cell, spec, &ml_root.child(c as u64))
        })
        .collect::<Result<_>>()?;

    let mut out = Output::default();
    let mut cells = AuxTable::new("grid_cells", &["cell_a", "cell_b", "rho1", "rho2", "method", "targets", "accuracy"]);
    for (c, acc) in accs.iter().enumerate() {
        let (a, b) = (c / r, c % r);
        cells.push(vec![
            a.to_string(),
            b.to_string(),
            fmt17(cell_centre(a, r)),
            fmt17(cell_centre(b, r)),
            MODEL_LESS.into(),
            cfg.targets_per_cell.to_string(),
            fmt17(*acc),
        ]);
    }
    out.extra
        .insert("model_less_grid_mean".into(), accs.iter().sum::<f64>() / accs.len() as f64);

    // Model-based cells: explicit ones first, then a random subset.
    let mut chosen: Vec<(usize, usize)> = cfg.cells.iter().map(|&(x, y)| (cell_of(x, r), cell_of(y, r))).collect();
    if cfg.model_based_cells > 0 {
        let mut rng = root.named("cells").stream();
        let picks = index::sample(&mut rng, r * r, cfg.model_based_cells.min(r * r));
        chosen.extend(picks.into_iter().map(|c| (c / r, c % r)));
    }
    for (a, b) in chosen {
        let (rho1, rho2) = (cell_centre(a, r), cell_centre(b, r));
        let node = root.named("model_based").child((a * r + b) as u64);
        let (rows, acc) = model_based_cell(cfg, rho1, rho2, &format!("cell={a}_{b}"), &node)?;
        cells.push(vec![
            a.to_string(),
            b.to_string(),
            fmt17(rho1),
            fmt17(rho2),
            MODEL_BASED.into(),
            cfg.targets().to_string(),
            fmt17(acc),
        ]);
        out.rows.extend(rows);
    }
    out.aux.push(cells);
    Ok(out)
}

/// `T'` models trained on data from the cell's scenario; a meta-classifier
/// is evaluated on them by k-fold cross-validation. The model-less guess
/// is recorded for the same models.
fn model_based_cell(
    cfg: &ExperimentConfig,
    rho1: f64,
    rho2: f64,
    setting: &str,
    node: &SeedTree,
) -> Result<(Vec<ReportRow>, f64)> {
    let spec = BinSpec::new(cfg.b)?;
    let scenario = Scenario::S1 { n: 3, rho1, rho2 };
    let mut params = attack_params(cfg, 3, cfg.b, cfg.dataset_size, cfg.threshold);
    params.k = cfg.targets();
    let margs = vec![Marginal::StandardNormal; 3];
    let ens = ShadowEnsemble::build(&scenario, &margs, &params, cfg.q, node)?;
    let meta = ens.meta_dataset(spec, params.source, params.mode, cfg.q)?;
    let len = meta.len();
    if len < cfg.folds {
        return Err(Error::TooFewRecords {
            needed: cfg.folds,
            actual: len,
        });
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut node.named("folds").stream());
    let mut guesses = vec![0usize; len];
    for f in 0..cfg.folds {
        let test: Vec<usize> = order.iter().copied().skip(f).step_by(cfg.folds).collect();
        let mut train: Vec<usize> = order.iter().enumerate().filter(|(i, _)| i % cfg.folds != f).map(|(_, &v)| v).collect();
        train.sort_unstable();
        let mut mcfg = params.meta.clone();
        mcfg.train.seed = node.named("meta").child(f as u64).seed_u64();
        match fit_meta(&meta.subset(&train), spec.b, &mcfg) {
            Ok(clf) => {
                for &i in &test {
                    guesses[i] = clf.predict(meta.row(i));
                }
            }
            Err(Error::DegenerateLabels(bin)) => {
                for &i in &test {
                    guesses[i] = bin;
                }
            }
            Err(e) => return Err(e),
        }
    }

    let iv = closed_form_interval(rho1, rho2);
    let mut rng = node.child(stage::MODEL_LESS).stream();
    let mut rows = Vec::with_capacity(2 * len);
    let mut hits = 0usize;
    for (i, (idx, _, c12)) in ens.shadows.iter().enumerate() {
        let true_bin = meta.labels()[i];
        let base = ReportRow {
            setting: setting.into(),
            target: *idx,
            method: MODEL_LESS.into(),
            constraints: vec![rho1, rho2],
            truth: *c12,
            true_bin,
            predicted_bin: model_less_predict(&iv, spec, &mut rng),
            estimate: None,
        };
        hits += usize::from(guesses[i] == true_bin);
        rows.push(ReportRow {
            method: MODEL_BASED.into(),
            predicted_bin: guesses[i],
            ..base.clone()
        });
        rows.push(base);
    }
    Ok((rows, hits as f64 / len as f64))
}
