//! Attribute inference from inferred correlations.
//!
//! The attacker knows a record's non-sensitive inputs and label and wants
//! the first input. Synthetic data is generated under the (shifted)
//! input–label constraints, kept only where its input–input correlations
//! fall in the bins inferred by the correlation attack, and the sensitive
//! value is estimated by averaging records that match the known part.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::BinSpec;
use crate::copula::{pearson, sample_copula, Dataset, Marginal, ThresholdRule};
use crate::corrmat::sample_s2;
use crate::error::{Error, Result};
use crate::models::Model;
use crate::rng::{stage, SeedTree};

/// Known inputs `x_2, …, x_{n−1}` and the label of a target record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialRecord {
    pub known: Vec<f64>,
    pub label: u8,
}

impl PartialRecord {
    /// Splits a full input row into `(x_1, partial record)`.
    pub fn from_row(row: &[f64], label: u8) -> (f64, Self) {
        (
            row[0],
            Self {
                known: row[1..].to_vec(),
                label,
            },
        )
    }

    /// Full input row with `x1` placed first.
    pub fn complete(&self, x1: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.known.len() + 1);
        x.push(x1);
        x.extend_from_slice(&self.known);
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiaParams {
    /// Synthetic datasets generated (`S'`).
    pub s_prime: usize,
    /// Sub-intervals per marginal (`G`).
    pub g: usize,
    /// Initial tolerance multiplier (`m_i`).
    pub m_init: f64,
    /// Tolerance increment (`δ_i`).
    pub delta: f64,
    /// Records per synthetic dataset.
    pub dataset_size: usize,
    pub threshold: ThresholdRule,
}

impl Default for AiaParams {
    fn default() -> Self {
        Self {
            s_prime: 1000,
            g: 100,
            m_init: 2.0,
            delta: 0.5,
            dataset_size: 1000,
            threshold: ThresholdRule::Median,
        }
    }
}

/// Inferred bin of `ρ(X_i, X_j)` for input indices `i < j` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairBin {
    pub i: usize,
    pub j: usize,
    pub bin: usize,
}

/// Concatenated synthetic records used for matching.
#[derive(Clone, Debug)]
pub struct SynthPool {
    pub data: Dataset,
    /// Datasets that passed the bin filter.
    pub survivors: usize,
    pub generated: usize,
    /// True if no dataset passed and the unfiltered pool is used instead.
    pub fallback: bool,
}

/// Component-wise mean of the per-pair shifted constraint vectors.
pub fn average_constraints(shifted: &[Vec<f64>]) -> Vec<f64> {
    let n = shifted.len() as f64;
    let mut out = vec![0.0; shifted[0].len()];
    for v in shifted {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x / n;
        }
    }
    out
}

/// Synthetic datasets generated under `v`, each flagged with whether its
/// input-pair correlations fall in `bins`.
fn generate(
    v: &[f64],
    marginals: &[Marginal],
    bins: &[PairBin],
    spec: BinSpec,
    params: &AiaParams,
    tree: &SeedTree,
) -> Result<Vec<(Dataset, bool)>> {
    let n = v.len() + 1;
    let base = tree.child(stage::AIA);
    (0..params.s_prime)
        .into_par_iter()
        .map(|s| -> Result<(Dataset, bool)> {
            let mut rng = base.child(s as u64).stream();
            let c = sample_s2(n, v, &mut rng);
            let data = sample_copula(&c, marginals, params.dataset_size, params.threshold, &mut rng)?;
            for pb in bins {
                match pearson(&data.column(pb.i), &data.column(pb.j)) {
                    Some(r) if spec.bin_of(r)? == pb.bin => {}
                    _ => return Ok((data, false)),
                }
            }
            Ok((data, true))
        })
        .collect()
}

fn concat<'a>(sets: impl Iterator<Item = &'a Dataset>) -> Option<Dataset> {
    let mut pool: Option<Dataset> = None;
    for d in sets {
        match &mut pool {
            Some(p) => p.extend(d),
            None => pool = Some(d.clone()),
        }
    }
    pool
}

/// Generates `s_prime` datasets under constraints `v` and keeps those whose
/// input-pair correlations fall in `bins` (all datasets if `bins` is empty).
pub fn build_pool(
    v: &[f64],
    marginals: &[Marginal],
    bins: &[PairBin],
    spec: BinSpec,
    params: &AiaParams,
    tree: &SeedTree,
) -> Result<SynthPool> {
    let sets = generate(v, marginals, bins, spec, params, tree)?;
    let survivors = sets.iter().filter(|s| s.1).count();
    let data = concat(sets.iter().filter(|s| s.1).map(|s| &s.0)).ok_or(Error::NoSurvivingDatasets)?;
    Ok(SynthPool {
        data,
        survivors,
        generated: params.s_prime,
        fallback: false,
    })
}

/// The filtered pool (falling back to all datasets if none survive) and
/// the unfiltered pool, from one shared generation pass.
pub fn build_paired_pools(
    v: &[f64],
    marginals: &[Marginal],
    bins: &[PairBin],
    spec: BinSpec,
    params: &AiaParams,
    tree: &SeedTree,
) -> Result<(SynthPool, SynthPool)> {
    let sets = generate(v, marginals, bins, spec, params, tree)?;
    let survivors = sets.iter().filter(|s| s.1).count();
    let all = concat(sets.iter().map(|s| &s.0)).ok_or(Error::NoSurvivingDatasets)?;
    let unfiltered = SynthPool {
        data: all,
        survivors: params.s_prime,
        generated: params.s_prime,
        fallback: false,
    };
    let filtered = match concat(sets.iter().filter(|s| s.1).map(|s| &s.0)) {
        Some(data) => SynthPool {
            data,
            survivors,
            generated: params.s_prime,
            fallback: false,
        },
        None => SynthPool {
            fallback: true,
            survivors: 0,
            ..unfiltered.clone()
        },
    };
    Ok((filtered, unfiltered))
}

/// Like [`build_pool`] but falls back to the unfiltered pool when nothing
/// survives, flagging it.
pub fn build_pool_or_fallback(
    v: &[f64],
    marginals: &[Marginal],
    bins: &[PairBin],
    spec: BinSpec,
    params: &AiaParams,
    tree: &SeedTree,
) -> Result<SynthPool> {
    match build_pool(v, marginals, bins, spec, params, tree) {
        Err(Error::NoSurvivingDatasets) => {
            let mut p = build_pool(v, marginals, &[], spec, params, tree)?;
            p.fallback = true;
            p.survivors = 0;
            Ok(p)
        }
        other => other,
    }
}

/// Averages `x_1` over pool records whose label equals the record's and
/// whose known inputs are within `m_i · b_i` of the record's, widening the
/// tolerance by `δ_i · b_i` until something matches.
pub fn match_record(pool: &Dataset, record: &PartialRecord, marginals: &[Marginal], params: &AiaParams) -> Result<f64> {
    if !pool.labels().contains(&record.label) {
        return Err(Error::MissingLabel(record.label));
    }
    let d = pool.d();
    if record.known.len() + 1 != d {
        return Err(Error::ShapeMismatch {
            expected: d - 1,
            actual: record.known.len(),
        });
    }
    let widths: Vec<f64> = (1..d).map(|i| marginals[i].span() / params.g as f64).collect();
    let mut mult = params.m_init;
    loop {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 0..pool.m() {
            if pool.labels()[r] != record.label {
                continue;
            }
            let row = pool.row(r);
            let ok = record
                .known
                .iter()
                .zip(&row[1..])
                .zip(&widths)
                .all(|((a, b), w)| (a - b).abs() <= mult * w);
            if ok {
                sum += row[0];
                count += 1;
            }
        }
        if count > 0 {
            return Ok(sum / count as f64);
        }
        mult += params.delta;
    }
}

/// Correlation-inference attribute inference for one record.
#[allow(clippy::too_many_arguments)]
pub fn ci_aia(
    shifted: &[Vec<f64>],
    marginals: &[Marginal],
    bins: &[PairBin],
    spec: BinSpec,
    record: &PartialRecord,
    params: &AiaParams,
    tree: &SeedTree,
) -> Result<f64> {
    let v = average_constraints(shifted);
    let pool = build_pool(&v, marginals, bins, spec, params, tree)?;
    match_record(&pool.data, record, marginals, params)
}

/// Matching on an unfiltered pool generated from the shifted constraints.
pub fn copula_shifted_baseline(
    shifted: &[f64],
    marginals: &[Marginal],
    spec: BinSpec,
    record: &PartialRecord,
    params: &AiaParams,
    tree: &SeedTree,
) -> Result<f64> {
    let pool = build_pool(shifted, marginals, &[], spec, params, tree)?;
    match_record(&pool.data, record, marginals, params)
}

/// A draw from the sensitive attribute's marginal.
pub fn marginal_prior<R: Rng + ?Sized>(f1: &Marginal, rng: &mut R) -> f64 {
    f1.sample(rng)
}

/// `conf[ŷ][y] = P(true label y | predicted ŷ)` on `data`; rows without
/// predictions are uniform.
pub fn confusion_matrix(model: &Model, data: &Dataset) -> [[f64; 2]; 2] {
    let mut counts = [[0usize; 2]; 2];
    for i in 0..data.m() {
        let yhat = model.predict(data.row(i)) as usize;
        counts[yhat][data.labels()[i] as usize] += 1;
    }
    let mut conf = [[0.5; 2]; 2];
    for (row, c) in conf.iter_mut().zip(counts) {
        let total = c[0] + c[1];
        if total > 0 {
            row[0] = c[0] as f64 / total as f64;
            row[1] = c[1] as f64 / total as f64;
        }
    }
    conf
}

/// One representative per sub-interval of `f1`, drawn uniformly inside it.
fn representatives<R: Rng + ?Sized>(f1: &Marginal, g: usize, rng: &mut R) -> Vec<(f64, f64)> {
    f1.cells(g)
        .into_iter()
        .map(|(a, b)| (a + (b - a) * rng.random::<f64>(), f1.mass(a, b)))
        .collect()
}

/// Most likely sub-interval given the marginal and the model's confusion.
pub fn fredrikson_aia<R: Rng + ?Sized>(
    model: &Model,
    record: &PartialRecord,
    f1: &Marginal,
    confusion: &[[f64; 2]; 2],
    g: usize,
    rng: &mut R,
) -> f64 {
    let reps = representatives(f1, g, rng);
    let mut best = (f64::NEG_INFINITY, reps[0].0);
    for &(x, mass) in &reps {
        let yhat = model.predict(&record.complete(x)) as usize;
        let score = mass * confusion[yhat][record.label as usize];
        if score > best.0 {
            best = (score, x);
        }
    }
    best.1
}

/// Value on which the model is most confident among those predicting the
/// record's label; the least confident value if none does.
pub fn csmia_aia<R: Rng + ?Sized>(model: &Model, record: &PartialRecord, f1: &Marginal, g: usize, rng: &mut R) -> f64 {
    let reps = representatives(f1, g, rng);
    let scored: Vec<(f64, u8, f64)> = reps
        .iter()
        .map(|&(x, _)| {
            let p1 = model.prob1(&record.complete(x));
            let yhat = u8::from(p1 >= 0.5);
            let conf = if yhat == 1 { p1 } else { 1.0 - p1 };
            (x, yhat, conf)
        })
        .collect();
    let matches: Vec<&(f64, u8, f64)> = scored.iter().filter(|s| s.1 == record.label).collect();
    match matches.len() {
        1 => matches[0].0,
        0 => {
            let mut best = scored[0];
            for s in &scored[1..] {
                if s.2 < best.2 {
                    best = *s;
                }
            }
            best.0
        }
        _ => {
            let mut best = *matches[0];
            for s in &matches[1..] {
                if s.2 > best.2 {
                    best = **s;
                }
            }
            best.0
        }
    }
}

/// Tertile cut points of a marginal.
pub fn tertiles(f1: &Marginal) -> Result<(f64, f64)> {
    Ok((f1.inverse_cdf(1.0 / 3.0)?, f1.inverse_cdf(2.0 / 3.0)?))
}

/// Tertile bin (0, 1 or 2) of `x`.
pub fn tertile_bin(x: f64, cuts: (f64, f64)) -> usize {
    if x < cuts.0 {
        0
    } else if x < cuts.1 {
        1
    } else {
        2
    }
}
