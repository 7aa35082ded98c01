use rand::Rng;

use super::{
    attack_params, guessed_bin, label_constraints, train_target, AuxTable, ExperimentConfig, ExperimentKind, Output,
    ReportRow, Target, MODEL_BASED, MODEL_LESS,
};
use crate::attacks::{extract_constraints, model_less_predict, BinSpec, FeatureMode, Interval, ShadowEnsemble};
use crate::copula::Marginal;
use crate::corrmat::{fmt17, sample_corr_matrix, sample_uniform_corr, Scenario};
use crate::error::Result;
use crate::rng::{stage, SeedTree};

/// Target `t` for `n` variables: the target correlation is generated first,
/// so it is uniform on `[-1, 1]`.
fn uniform_prior_target(cfg: &ExperimentConfig, n: usize, node: &SeedTree) -> Result<Target> {
    let truth = sample_corr_matrix(n, &mut node.child(stage::TARGET_MATRIX).stream());
    let margs = vec![Marginal::StandardNormal; n];
    train_target(truth, &margs, cfg.dataset_size, cfg.threshold, cfg.model, node)
}

pub(crate) fn run_increasing_n(cfg: &ExperimentConfig, root: &SeedTree) -> Result<Output> {
    let spec = BinSpec::new(cfg.b)?;
    let mut out = Output::default();
    for n in cfg.n_values() {
        let setting = format!("n={n}");
        let params = attack_params(cfg, n, cfg.b, cfg.dataset_size, cfg.threshold);
        let margs = vec![Marginal::StandardNormal; n];
        for t in 0..cfg.targets() {
            let node = root.named(&setting).child(t as u64);
            let target = uniform_prior_target(cfg, n, &node)?;
            let scenario = Scenario::from_truth(cfg.scenario, &target.truth);
            let c12 = target.c12()?;
            let true_bin = spec.bin_of(c12)?;
            let iv = Interval::of_scenario(&scenario)?;
            let ml = model_less_predict(&iv, spec, &mut node.child(stage::MODEL_LESS).stream());
            let mb = guessed_bin(crate::attacks::run_model_based_attack(
                &target.model,
                &scenario,
                &margs,
                &params,
                &node.named("attack"),
            ))?;
            let base = ReportRow {
                setting: setting.clone(),
                target: t,
                method: MODEL_LESS.into(),
                constraints: scenario.values(),
                truth: c12,
                true_bin,
                predicted_bin: ml,
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
    Ok(out)
}

/// Sweeps the query count or the output precision, reusing one shadow
/// ensemble per target.
pub(crate) fn run_mitigations(cfg: &ExperimentConfig, root: &SeedTree) -> Result<Output> {
    let spec = BinSpec::new(cfg.b)?;
    let by_queries = cfg.experiment == ExperimentKind::MitigationQueries;
    let sweep: Vec<(String, usize, FeatureMode)> = if by_queries {
        cfg.queries.iter().map(|&q| (format!("q={q}"), q, FeatureMode::Full)).collect()
    } else {
        cfg.precisions
            .iter()
            .map(|&m| (format!("precision={m}"), cfg.q, m))
            .collect()
    };
    let query_size = sweep.iter().map(|s| s.1).max().unwrap_or(cfg.q);
    let mut out = Output::default();
    for n in cfg.n_values() {
        let params = attack_params(cfg, n, cfg.b, cfg.dataset_size, cfg.threshold);
        let margs = vec![Marginal::StandardNormal; n];
        for t in 0..cfg.targets() {
            let node = root.named(&format!("n={n}")).child(t as u64);
            let target = uniform_prior_target(cfg, n, &node)?;
            let scenario = Scenario::from_truth(cfg.scenario, &target.truth);
            let c12 = target.c12()?;
            let true_bin = spec.bin_of(c12)?;
            let tree = node.named("attack");
            let ens = ShadowEnsemble::build(&scenario, &margs, &params, query_size, &tree)?;
            for (label, q, mode) in &sweep {
                let guess = guessed_bin(ens.attack(&target.model, &params, *mode, *q, &tree))?;
                out.rows.push(ReportRow {
                    setting: format!("n={n}/{label}"),
                    target: t,
                    method: MODEL_BASED.into(),
                    constraints: scenario.values(),
                    truth: c12,
                    true_bin,
                    predicted_bin: guess,
                    estimate: None,
                });
            }
        }
    }
    Ok(out)
}

/// Uniform guesses averaged per trial for the Monte-Carlo random baseline.
const GUESS_DRAWS: usize = 1000;

/// Mean squared error between two vectors.
pub(crate) fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// Expected squared error of a uniform guess on `[-1, 1]` against `c`.
pub(crate) fn random_guess_mse(c: &[f64]) -> f64 {
    c.iter().map(|v| 1.0 / 3.0 + v * v).sum::<f64>() / c.len() as f64
}

/// Probes targets with independent inputs and compares the recovered
/// input–label correlations with those of the training data. Target
/// matrices are uniform over all valid matrices.
pub(crate) fn run_extract_constraints(cfg: &ExperimentConfig, root: &SeedTree) -> Result<Output> {
    let spec = BinSpec::new(cfg.b)?;
    let n = cfg.n;
    let margs = vec![Marginal::StandardNormal; n - 1];
    let normals = vec![Marginal::StandardNormal; n];
    let mut out = Output::default();
    let mut table = AuxTable::new("extraction", &["q_tilde", "trial", "mse", "random_guess_mse", "analytic_random_mse"]);
    let trials = cfg.targets();
    let mut sums = vec![0.0; cfg.q_tildes.len()];
    let (mut random_mc, mut random_exact) = (0.0, 0.0);
    for t in 0..trials {
        let node = root.child(t as u64);
        let matrix = sample_uniform_corr(n, &mut node.child(stage::TARGET_MATRIX).stream());
        let target = train_target(matrix, &normals, cfg.dataset_size, cfg.threshold, cfg.model, &node)?;
        let truth = label_constraints(&target.data)?;
        let mut grng = node.named("random-guess").stream();
        let guess_mse = (0..GUESS_DRAWS)
            .map(|_| {
                let guess: Vec<f64> = truth.iter().map(|_| grng.random_range(-1.0..=1.0)).collect();
                mse(&guess, &truth)
            })
            .sum::<f64>()
            / GUESS_DRAWS as f64;
        let exact = random_guess_mse(&truth);
        random_mc += guess_mse / trials as f64;
        random_exact += exact / trials as f64;
        for (k, &qt) in cfg.q_tildes.iter().enumerate() {
            let mut rng = node.child(stage::EXTRACTION).child(qt as u64).stream();
            let ex = extract_constraints(&target.model, &margs, qt, &mut rng)?;
            let e = mse(&ex.estimates, &truth);
            sums[k] += e / trials as f64;
            table.push(vec![qt.to_string(), t.to_string(), fmt17(e), fmt17(guess_mse), fmt17(exact)]);
            for (i, (&est, &c)) in ex.estimates.iter().zip(&truth).enumerate() {
                out.rows.push(ReportRow {
                    setting: format!("q_tilde={qt}"),
                    target: t,
                    method: format!("extraction_x{}", i + 1),
                    constraints: truth.clone(),
                    truth: c,
                    true_bin: spec.bin_of(c)?,
                    predicted_bin: spec.bin_of(est)?,
                    estimate: Some(est),
                });
            }
        }
    }
    for (k, &qt) in cfg.q_tildes.iter().enumerate() {
        out.extra.insert(format!("mse_q_tilde_{qt}"), sums[k]);
    }
    out.extra.insert("random_guess_mse".into(), random_mc);
    out.extra.insert("random_guess_mse_analytic".into(), random_exact);
    out.aux.push(table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_guess_formula_matches_monte_carlo() {
        let c = [0.3, -0.7];
        let mut rng = SeedTree::new(1).stream();
        let trials = 200_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let g: Vec<f64> = c.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
            acc += mse(&g, &c);
        }
        assert!((acc / trials as f64 - random_guess_mse(&c)).abs() < 0.005);
        assert!((random_guess_mse(&[0.0]) - 1.0 / 3.0).abs() < 1e-15);
    }
}
