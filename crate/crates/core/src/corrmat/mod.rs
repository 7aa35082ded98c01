//! Correlation matrices and the spherical (Cholesky) parametrization.
//!
//! A valid correlation matrix has entries in `[-1, 1]`, a unit diagonal, is
//! symmetric and positive semi-definite. Writing `C = B Bᵀ` with `B` lower
//! triangular, every row of `B` has unit norm, so rows are points on spheres
//! and each off-diagonal coefficient `c[i][j]` (i > j) decomposes as
//! `m + cos(θ) · l`, where `m` and `l` depend only on entries filled earlier.
//! The samplers in [`sample`] walk that decomposition.

mod sample;
mod scenario;

pub use sample::{
    complete_from_first_column, s3_bounds, sample_corr_matrix, sample_s1, sample_s2, sample_s3,
    sample_uniform_corr,
};
pub use scenario::{Scenario, ScenarioKind};
pub(crate) use scenario::closed_form_bounds as scenario_closed_form;

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default tolerance for [`CorrMatrix::is_valid`].
pub const VALIDITY_TOL: f64 = 1e-8;

/// Pivots below this magnitude are treated as exact zeros by [`cholesky`].
const PIVOT_FLOOR: f64 = 1e-20;

/// Dense row-major `n × n` correlation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CorrMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    /// Builds a matrix from rows; only squareness is checked.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { n, entries })
    }

    pub(crate) fn from_raw(n: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set_symmetric(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
        self.entries[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Reorders rows then columns: entry `(a, b)` of the result is
    /// `self[perm[a]][perm[b]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                entries[a * n + b] = self.entries[pa * n + pb];
            }
        }
        Self { n, entries }
    }

    /// Principal submatrix over `idx`, in that order.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut entries = Vec::with_capacity(k * k);
        for &a in idx {
            for &b in idx {
                entries.push(self.entries[a * self.n + b]);
            }
        }
        Self { n: k, entries }
    }

    /// Smallest eigenvalue, or NaN for non-finite input.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.entries.iter().any(|v| !v.is_finite()) {
            return f64::NAN;
        }
        let m = nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.entries);
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the four defining properties with slack `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        is_valid(self, tol)
    }

    pub fn max_abs_diff(&self, other: &CorrMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Row-major CSV block, one row per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|&v| fmt17(v)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (r, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .enumerate()
                .map(|(c, field)| {
                    f64::from_str(field.trim()).map_err(|e| Error::Parse {
                        row: r,
                        column: c,
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize, Deserialize)]
struct CorrMatrixRepr {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl Serialize for CorrMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CorrMatrixRepr {
            n: self.n,
            entries: self.rows(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CorrMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CorrMatrixRepr::deserialize(deserializer)?;
        let m = CorrMatrix::from_rows(&repr.entries).map_err(serde::de::Error::custom)?;
        if m.n != repr.n {
            return Err(serde::de::Error::custom(format!(
                "declared n = {} but {} rows present",
                repr.n, m.n
            )));
        }
        Ok(m)
    }
}

/// True iff P1–P4 hold: entries within `[-1-tol, 1+tol]`, diagonal within
/// `tol` of 1, symmetric within `tol`, and minimum eigenvalue `>= -tol`.
pub fn is_valid(c: &CorrMatrix, tol: f64) -> bool {
    let n = c.n;
    for i in 0..n {
        if (c.get(i, i) - 1.0).abs() > tol {
            return false;
        }
        for j in 0..n {
            let v = c.get(i, j);
            if !v.is_finite() || v.abs() > 1.0 + tol {
                return false;
            }
            if (v - c.get(j, i)).abs() > tol {
                return false;
            }
        }
    }
    c.min_eigenvalue() >= -tol
}

/// Lower-triangular factor `B` with `C = B Bᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    entries: Vec<f64>,
}

impl CholeskyFactor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = CorrMatrix::from_rows(rows)?;
        Ok(Self {
            n: m.n,
            entries: m.entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `B Bᵀ`.
    pub fn reconstruct(&self) -> CorrMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], &self.row(j)[..=j]);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        CorrMatrix::from_raw(n, out)
    }

    /// `y = B z` for a vector `z` of length `n`.
    #[inline]
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = dot(&self.row(i)[..=i], &z[..=i]);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factorization tolerant to rank deficiency.
///
/// Pivots in `[-1e-8, 0]` are clamped to zero and the corresponding column is
/// completed with zeros; a pivot below `-1e-8` is reported as
/// [`Error::NotPositiveSemiDefinite`].
pub fn cholesky(c: &CorrMatrix) -> Result<CholeskyFactor> {
    let n = c.n;
    let mut b = CholeskyFactor::zeros(n);
    for j in 0..n {
        let head = &b.row(j)[..j];
        let pivot = c.get(j, j) - dot(head, head);
        if pivot < -VALIDITY_TOL || pivot.is_nan() {
            return Err(Error::NotPositiveSemiDefinite { index: j, pivot });
        }
        if pivot <= PIVOT_FLOOR {
            // Column j stays zero below the diagonal.
            continue;
        }
        let d = pivot.sqrt();
        b.set(j, j, d);
        for i in (j + 1)..n {
            let s = dot(&b.row(i)[..j], &b.row(j)[..j]);
            b.set(i, j, (c.get(i, j) - s) / d);
        }
    }
    Ok(b)
}

/// Bounds `(m, l)` such that any `c[i][j]` in `[m - l, m + l]` admits a PSD
/// completion given rows `< i` and `b[i][..j]` (0-based, `i > j`).
///
/// `b[i][j]` must hold the remaining norm of row `i` before column `j` is set.
pub fn coefficient_bounds(partial: &CholeskyFactor, i: usize, j: usize) -> Result<(f64, f64)> {
    if i <= j {
        return Err(Error::IndexOrder { i, j });
    }
    let m = dot(&partial.row(i)[..j], &partial.row(j)[..j]);
    let l = (partial.get(i, j) * partial.get(j, j)).abs();
    Ok((m, l))
}

/// Inverse of an index-array permutation.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn m(rows: &[&[f64]]) -> CorrMatrix {
        CorrMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_is_valid() {
        assert!(is_valid(&CorrMatrix::identity(3), VALIDITY_TOL));
    }

    #[test]
    fn entry_above_one_is_invalid() {
        assert!(!is_valid(&m(&[&[1.0, 1.5], &[1.5, 1.0]]), VALIDITY_TOL));
    }

    #[test]
    fn all_minus_point_nine_is_not_psd() {
        // Characteristic polynomial of J-type matrix: eigenvalues 1 + 2c and 1 - c
        // (twice); 1 + 2(-0.9) = -0.8.
        let c = m(&[&[1.0, -0.9, -0.9], &[-0.9, 1.0, -0.9], &[-0.9, -0.9, 1.0]]);
        assert!(!is_valid(&c, VALIDITY_TOL));
        assert!((c.min_eigenvalue() + 0.8).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_and_bad_diagonal_rejected() {
        assert!(!is_valid(&m(&[&[1.0, 0.2], &[0.3, 1.0]]), VALIDITY_TOL));
        assert!(!is_valid(&m(&[&[0.9, 0.0], &[0.0, 1.0]]), VALIDITY_TOL));
    }

    #[test]
    fn cholesky_of_identity() {
        let b = cholesky(&CorrMatrix::identity(4)).unwrap();
        assert_eq!(b.reconstruct(), CorrMatrix::identity(4));
        for i in 0..4 {
            assert_eq!(b.get(i, i), 1.0);
        }
    }

    #[test]
    fn cholesky_two_by_two_row_is_cos_sin() {
        let b = cholesky(&m(&[&[1.0, 0.6], &[0.6, 1.0]])).unwrap();
        assert!((b.get(1, 0) - 0.6).abs() < 1e-15);
        assert!((b.get(1, 1) - 0.8).abs() < 1e-15);
        assert_eq!(b.get(0, 1), 0.0);
    }

    #[test]
    fn cholesky_rank_deficient_and_error() {
        let c = m(&[&[1.0, 1.0, 0.5], &[1.0, 1.0, 0.5], &[0.5, 0.5, 1.0]]);
        let b = cholesky(&c).unwrap();
        assert!(b.reconstruct().max_abs_diff(&c) < 1e-12);
        let bad = m(&[&[1.0, -0.9, -0.9], &[-0.9, 1.0, -0.9], &[-0.9, -0.9, 1.0]]);
        assert!(matches!(
            cholesky(&bad),
            Err(Error::NotPositiveSemiDefinite { .. })
        ));
    }

    #[test]
    fn cholesky_rows_have_unit_norm() {
        let mut rng = crate::rng::Stream::seed_from_u64(3);
        for _ in 0..50 {
            let c = sample_corr_matrix(5, &mut rng);
            let b = cholesky(&c).unwrap();
            assert!(b.reconstruct().max_abs_diff(&c) < 1e-9);
            for i in 0..5 {
                let norm: f64 = b.row(i).iter().map(|v| v * v).sum();
                assert!((norm - 1.0).abs() < 1e-9);
                assert!(b.get(i, i) >= 0.0);
                for j in (i + 1)..5 {
                    assert_eq!(b.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn first_coefficient_bounds_are_full_range() {
        let mut b = CholeskyFactor::zeros(2);
        b.set(0, 0, 1.0);
        b.set(1, 0, 1.0);
        assert_eq!(coefficient_bounds(&b, 1, 0).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn bounds_for_n3_first_column_half() {
        // Row 0 = (1, 0, 0); rows 1 and 2 start with cos θ = 0.5 and carry
        // sin θ as their remaining norm.
        let s = (0.75f64).sqrt();
        let b = CholeskyFactor::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.5, s, 0.0],
            vec![0.5, s, s],
        ])
        .unwrap();
        let (m, l) = coefficient_bounds(&b, 2, 1).unwrap();
        assert!((m - 0.25).abs() < 1e-15);
        assert!((l - 0.75).abs() < 1e-15);
        assert!(matches!(
            coefficient_bounds(&b, 1, 1),
            Err(Error::IndexOrder { .. })
        ));
    }

    #[test]
    fn csv_and_json_round_trip_exactly() {
        let mut rng = crate::rng::Stream::seed_from_u64(11);
        let c = sample_corr_matrix(4, &mut rng);
        assert_eq!(CorrMatrix::from_csv(&c.to_csv()).unwrap(), c);
        assert_eq!(CorrMatrix::from_json(&c.to_json().unwrap()).unwrap(), c);
        let json = c.to_json().unwrap();
        assert!(json.starts_with("{\"n\":4,\"entries\":[["));
    }

    #[test]
    fn json_rejects_mismatched_n() {
        assert!(CorrMatrix::from_json(r#"{"n":3,"entries":[[1,0],[0,1]]}"#).is_err());
        assert!(CorrMatrix::from_json(r#"{"n":2,"entries":[[1,0],[0]]}"#).is_err());
    }

    #[test]
    fn permutation_inverse_restores() {
        let mut rng = crate::rng::Stream::seed_from_u64(5);
        let c = sample_corr_matrix(5, &mut rng);
        let perm = vec![3, 0, 4, 1, 2];
        let back = c.permuted(&perm).permuted(&invert_permutation(&perm));
        assert_eq!(back, c);
    }
}
