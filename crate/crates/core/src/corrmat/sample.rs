use rand::seq::SliceRandom;
use rand::Rng;

use super::{cholesky, dot, invert_permutation, CholeskyFactor, CorrMatrix};
use crate::error::{Error, Result};

/// Below this half-width the coefficient is pinned to its center.
const DEGENERATE_WIDTH: f64 = 1e-10;

#[inline]
fn uniform_in<R: Rng + ?Sized>(m: f64, l: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    m + l * (2.0 * u - 1.0)
}

/// Completes a matrix whose first column (below the diagonal) is `first`.
///
/// Entries are then filled column by column, each drawn uniformly within its
/// coefficient bounds. Entry `(2, 1)` is the first one sampled.
pub fn complete_from_first_column<R: Rng + ?Sized>(first: &[f64], rng: &mut R) -> CorrMatrix {
    let n = first.len() + 1;
    let mut c = vec![0.0; n * n];
    // Row i of `b` holds the finished prefix and, from column j onward, the
    // remaining norm of that row.
    let mut b = CholeskyFactor::zeros(n);
    b.set(0, 0, 1.0);
    for i in 1..n {
        let v = first[i - 1].clamp(-1.0, 1.0);
        c[i * n] = first[i - 1];
        c[i] = first[i - 1];
        b.set(i, 0, v);
        let rest = (1.0 - v * v).max(0.0).sqrt();
        for k in 1..=i {
            b.set(i, k, rest);
        }
    }
    for j in 1..n {
        for i in (j + 1)..n {
            let m = dot(&b.row(i)[..j], &b.row(j)[..j]);
            let l = b.get(i, j) * b.get(j, j);
            let (value, aux) = if l < DEGENERATE_WIDTH {
                (m, 0.0)
            } else {
                let v = uniform_in(m, l, rng);
                (v, ((v - m) / l).clamp(-1.0, 1.0))
            };
            c[i * n + j] = value;
            c[j * n + i] = value;
            let bij = b.get(i, j);
            b.set(i, j, bij * aux);
            let shrink = (1.0 - aux * aux).max(0.0).sqrt();
            for k in (j + 1)..=i {
                let v = b.get(i, k);
                b.set(i, k, v * shrink);
            }
        }
    }
    for i in 0..n {
        c[i * n + i] = 1.0;
    }
    CorrMatrix::from_raw(n, c)
}

/// Samples an unconstrained correlation matrix.
pub fn sample_corr_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CorrMatrix {
    assert!(n >= 2, "n must be at least 2");
    let first: Vec<f64> = (0..n - 1).map(|_| uniform_in(0.0, 1.0, rng)).collect();
    complete_from_first_column(&first, rng)
}

/// Samples uniformly over all valid `n × n` correlation matrices by
/// rejection. The acceptance rate falls quickly with `n`; meant for `n <= 6`.
pub fn sample_uniform_corr<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CorrMatrix {
    assert!(n >= 2, "n must be at least 2");
    loop {
        let mut c = CorrMatrix::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                c.set_symmetric(i, j, rng.random_range(-1.0..=1.0));
            }
        }
        if c.min_eigenvalue() >= 0.0 {
            return c;
        }
    }
}

/// Samples with `c[0][n-1] = rho1` and `c[1][n-1] = rho2` (variables
/// `X_1, …, X_{n-1}, Y`, 0-based).
pub fn sample_s1<R: Rng + ?Sized>(n: usize, rho1: f64, rho2: f64, rng: &mut R) -> CorrMatrix {
    assert!(n >= 3, "n must be at least 3");
    let mut first = Vec::with_capacity(n - 1);
    first.push(rho1);
    first.push(rho2);
    for _ in 3..n {
        first.push(uniform_in(0.0, 1.0, rng));
    }
    let c = complete_from_first_column(&first, rng);
    // c is ordered (Y, X_1, X_2, X_3, …); the others are shuffled so their
    // roles are symmetric, then Y moves last.
    let mut rest: Vec<usize> = (3..n).collect();
    rest.shuffle(rng);
    let mut perm = vec![1, 2];
    perm.extend(rest);
    perm.push(0);
    c.permuted(&perm)
}

/// Samples with `c[i][n-1] = v[i]` for every input `i`.
pub fn sample_s2<R: Rng + ?Sized>(n: usize, v: &[f64], rng: &mut R) -> CorrMatrix {
    assert!(n >= 3, "n must be at least 3");
    assert_eq!(v.len(), n - 1, "constraint vector length");
    let mut sigma: Vec<usize> = (0..n - 1).collect();
    sigma[2..].shuffle(rng);
    let first: Vec<f64> = sigma.iter().map(|&s| v[s]).collect();
    // Sampled order: (Y, X_{σ0}, X_{σ1}, …).
    let c = complete_from_first_column(&first, rng);
    let inv = invert_permutation(&sigma);
    let mut perm: Vec<usize> = inv.iter().map(|&p| p + 1).collect();
    perm.push(0);
    c.permuted(&perm)
}

/// Feasible `(m, l)` for the `(0, 1)` entry given every other entry of
/// `known`. The `(0, 1)` value stored in `known` is ignored.
pub fn s3_bounds(known: &CorrMatrix) -> Result<(f64, f64)> {
    let n = known.n();
    if n < 3 {
        return Err(Error::InvalidMatrix(format!("S3 needs n >= 3, got {n}")));
    }
    // Reverse order: Y, X_{n-1}, …, X_2, X_1. The target pair becomes the
    // last entry of the last row.
    let rev: Vec<usize> = (0..n).rev().collect();
    let cr = known.permuted(&rev);
    let block = cr.principal(&(0..n - 1).collect::<Vec<_>>());
    let bf = cholesky(&block).map_err(|e| {
        Error::InfeasibleConstraints(format!("known block is not positive semi-definite: {e}"))
    })?;
    let last = n - 1;
    let mut r = vec![0.0; n - 1];
    for i in 0..n - 2 {
        let s = dot(&bf.row(i)[..i], &r[..i]);
        let residual = cr.get(last, i) - s;
        let d = bf.get(i, i);
        if d == 0.0 {
            if residual.abs() > 1e-8 {
                return Err(Error::InfeasibleConstraints(format!(
                    "entry {i} of the last row cannot be matched (residual {residual:.3e})"
                )));
            }
            r[i] = 0.0;
        } else {
            r[i] = residual / d;
        }
    }
    let rest = 1.0 - dot(&r[..n - 2], &r[..n - 2]);
    if rest < -1e-8 {
        return Err(Error::InfeasibleConstraints(format!(
            "no PSD completion exists (remaining norm {rest:.3e})"
        )));
    }
    r[n - 2] = rest.max(0.0).sqrt();
    let m = dot(&bf.row(n - 2)[..n - 2], &r[..n - 2]);
    let l = bf.get(n - 2, n - 2) * r[n - 2];
    Ok((m, l))
}

/// Copies `known` and redraws the `(0, 1)` entry uniformly in its bounds.
pub fn sample_s3<R: Rng + ?Sized>(known: &CorrMatrix, rng: &mut R) -> Result<CorrMatrix> {
    let (m, l) = s3_bounds(known)?;
    let v = if l < DEGENERATE_WIDTH {
        m
    } else {
        uniform_in(m, l, rng)
    };
    let mut out = known.clone();
    out.set_symmetric(0, 1, v.clamp(-1.0, 1.0));
    Ok(out)
}
