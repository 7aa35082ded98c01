use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::copula::{pearson, Marginal};
use crate::error::{Error, Result};
use crate::models::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    /// Estimated `ρ(X_i, Y)` per input.
    pub estimates: Vec<f64>,
    /// Set when every probe received the same label; estimates are then zero.
    pub degenerate: bool,
}

/// Estimates the input–label correlations of `model`'s training data by
/// labelling `q_tilde` probes whose coordinates are drawn independently
/// from the input marginals.
pub fn extract_constraints<R: Rng + ?Sized>(
    model: &Model,
    marginals: &[Marginal],
    q_tilde: usize,
    rng: &mut R,
) -> Result<Extraction> {
    let d = model.n_inputs();
    if marginals.len() < d {
        return Err(Error::ShapeMismatch {
            expected: d,
            actual: marginals.len(),
        });
    }
    let mut cols = vec![Vec::with_capacity(q_tilde); d];
    let mut labels = Vec::with_capacity(q_tilde);
    let mut x = vec![0.0; d];
    for _ in 0..q_tilde {
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = marginals[j].sample(rng);
            cols[j].push(*xj);
        }
        labels.push(f64::from(model.predict(&x)));
    }
    let mut degenerate = false;
    let estimates = cols
        .iter()
        .map(|c| {
            pearson(c, &labels).unwrap_or_else(|| {
                degenerate = true;
                0.0
            })
        })
        .collect();
    if degenerate {
        log::warn!("model predicted a single class on all {q_tilde} probes");
    }
    Ok(Extraction {
        estimates,
        degenerate,
    })
}
