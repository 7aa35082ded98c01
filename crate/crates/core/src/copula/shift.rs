//! Iterative correction of copula parameters for non-normal marginals.
//!
//! Pushing correlated normals through `F⁻¹ ∘ Φ` (and thresholding the label)
//! changes their Pearson correlations. The heuristic repeatedly generates
//! shadow datasets, measures the average empirical value of every known
//! entry, and moves the parameter half-way towards closing the gap.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_copula, Marginal, ThresholdRule};
use crate::corrmat::Scenario;
use crate::error::{Error, Result};
use crate::rng::{stage, SeedTree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftParams {
    /// Shadow datasets averaged per iteration.
    pub s: usize,
    /// Records per shadow dataset.
    pub n_d: usize,
    /// Stop once every entry is within this distance of its target.
    pub e: f64,
    /// Maximum number of iterations.
    pub max_iter: usize,
    pub threshold: ThresholdRule,
}

impl Default for ShiftParams {
    fn default() -> Self {
        Self {
            s: 100,
            n_d: 1000,
            e: 0.01,
            max_iter: 10,
            threshold: ThresholdRule::Median,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftOutcome {
    /// Best parameter values found, in the scenario's known-entry order.
    pub values: Vec<f64>,
    /// `max_i |V̄_i − V_i|` achieved by `values`.
    pub gap: f64,
    /// Iterations evaluated.
    pub iterations: usize,
    /// Best gap after each iteration (non-increasing).
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Shifts the `ρ(X_i, Y)` constraints of an S2 scenario.
pub fn shift_constraints<R: Rng + ?Sized>(
    v: &[f64],
    marginals: &[Marginal],
    params: &ShiftParams,
    rng: &mut R,
) -> Result<ShiftOutcome> {
    let scenario = Scenario::S2 {
        constraints: v.to_vec(),
    };
    let tree = SeedTree::new(rng.random());
    shift_scenario(&scenario, marginals, params, &tree)
}

/// Shifts every known entry of `scenario` so that synthetic data generated
/// from the shifted parameters reproduces the original values on average.
pub fn shift_scenario(
    scenario: &Scenario,
    marginals: &[Marginal],
    params: &ShiftParams,
    tree: &SeedTree,
) -> Result<ShiftOutcome> {
    let target = scenario.values();
    let positions = scenario.known_positions();
    let mut current = target.clone();
    let mut best = (current.clone(), f64::INFINITY);
    let mut history = Vec::new();
    let mut iterations = 0;
    for it in 0..params.max_iter {
        let candidate = scenario.with_values(&current);
        let means = match average_entries(&candidate, &positions, marginals, params, tree, it) {
            Ok(m) => m,
            // A shifted S3 parameter set can leave the feasible region; keep
            // the best point found so far.
            Err(Error::InfeasibleConstraints(_)) if it > 0 => break,
            Err(e) => return Err(e),
        };
        iterations = it + 1;
        let gap = means
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap < best.1 {
            best = (current.clone(), gap);
        }
        history.push(best.1);
        if gap < params.e {
            break;
        }
        for ((c, &t), &mbar) in current.iter_mut().zip(&target).zip(&means) {
            *c = (*c + (t - mbar) / 2.0).clamp(-1.0, 1.0);
        }
    }
    Ok(ShiftOutcome {
        converged: best.1 < params.e,
        values: best.0,
        gap: best.1,
        iterations,
        history,
    })
}

fn average_entries(
    scenario: &Scenario,
    positions: &[(usize, usize)],
    marginals: &[Marginal],
    params: &ShiftParams,
    tree: &SeedTree,
    iteration: usize,
) -> Result<Vec<f64>> {
    let base = tree.child(stage::SHIFT).child(iteration as u64);
    let per_shadow: Vec<Option<Vec<f64>>> = (0..params.s)
        .into_par_iter()
        .map(|s| -> Result<Option<Vec<f64>>> {
            let mut rng = base.child(s as u64).stream();
            let c = scenario.sample(&mut rng)?;
            let data = sample_copula(&c, marginals, params.n_d, params.threshold, &mut rng)?;
            let cols: Vec<Vec<f64>> = (0..data.n()).map(|j| data.column(j)).collect();
            Ok(positions
                .iter()
                .map(|&(i, j)| super::pearson(&cols[i], &cols[j]))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sums = vec![0.0; positions.len()];
    let mut used = 0usize;
    for vals in per_shadow.into_iter().flatten() {
        for (s, v) in sums.iter_mut().zip(vals) {
            *s += v;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::ZeroVariance {
            column: scenario.n() - 1,
        });
    }
    Ok(sums.into_iter().map(|s| s / used as f64).collect())
}
