//! Marginals, Gaussian-copula synthesis and constraint shifting.
//!
//! A record is drawn by sampling `z ~ N(0, I)`, correlating it with the
//! Cholesky factor of `C`, and pushing each coordinate through
//! `F_i⁻¹ ∘ Φ`. The last coordinate is binarized into the label.

mod dataset;
mod marginal;
mod normal;
mod shift;

pub use dataset::{pearson, Dataset, ThresholdRule};
pub use marginal::{fit_marginal, Discretized, Marginal, NORMAL_SPAN};
pub use normal::{phi, phi_inv};
pub use shift::{shift_constraints, shift_scenario, ShiftOutcome, ShiftParams};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corrmat::{cholesky, is_valid, CorrMatrix, VALIDITY_TOL};
use crate::error::{Error, Result};

/// Draws `m` records from the Gaussian copula with correlation `c` and the
/// given marginals (one per variable, label last).
pub fn sample_copula<R: Rng + ?Sized>(
    c: &CorrMatrix,
    marginals: &[Marginal],
    m: usize,
    rule: ThresholdRule,
    rng: &mut R,
) -> Result<Dataset> {
    let n = c.n();
    if marginals.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            actual: marginals.len(),
        });
    }
    if !is_valid(c, VALIDITY_TOL) {
        return Err(Error::InvalidMatrix(
            "copula parameter is not a valid correlation matrix".into(),
        ));
    }
    let b = cholesky(c)?;
    let d = n - 1;
    let mut inputs = Vec::with_capacity(m * d);
    let mut out = Vec::with_capacity(m);
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    for _ in 0..m {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        b.mul_vec(&z, &mut x);
        for (j, marg) in marginals.iter().enumerate().take(d) {
            inputs.push(marg.from_latent(x[j]));
        }
        out.push(marginals[d].from_latent(x[d]));
    }
    let labels = rule.binarize(&out);
    Ok(Dataset::from_parts_unchecked(d, inputs, labels).with_provenance(c.clone()))
}

/// Pearson correlation matrix of all variables, label included as 0/1.
pub fn empirical_corr(data: &Dataset) -> Result<CorrMatrix> {
    if data.m() < 3 {
        return Err(Error::TooFewRecords {
            needed: 3,
            actual: data.m(),
        });
    }
    let n = data.n();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| data.column(j)).collect();
    let mut c = CorrMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = pearson(&cols[i], &cols[j]).ok_or_else(|| {
                let flat = |col: &[f64]| col.iter().all(|&v| v == col[0]);
                Error::ZeroVariance {
                    column: if flat(&cols[i]) { i } else { j },
                }
            })?;
            c.set_symmetric(i, j, r);
        }
    }
    Ok(c)
}
