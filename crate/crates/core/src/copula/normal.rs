//! Standard normal CDF and quantile function.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn standard() -> Normal {
    Normal::standard()
}

/// `Φ(x)`.
pub fn phi(x: f64) -> f64 {
    standard().cdf(x)
}

/// `Φ⁻¹(u)` for `u ∈ (0, 1)`.
pub fn phi_inv(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::DomainError {
            value: u,
            domain: "(0, 1)",
        });
    }
    Ok(standard().inverse_cdf(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ via the Maclaurin series of erf, independent of the library.
    fn phi_series(x: f64) -> f64 {
        let z = x / std::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        while term.abs() > 1e-18 {
            k += 1.0;
            term *= -z * z / k;
            sum += term / (2.0 * k + 1.0);
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    fn bisect(u: f64) -> f64 {
        let (mut lo, mut hi) = (-8.0, 8.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_series(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(phi_inv(0.5).unwrap(), 0.0);
        let q = phi_inv(0.975).unwrap();
        assert!((q - bisect(0.975)).abs() < 1e-9);
        assert!((q - 1.959964).abs() < 1e-6);
        for &u in &[0.001, 0.02, 0.3, 0.77, 0.999] {
            assert!((phi_inv(u).unwrap() - bisect(u)).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_errors() {
        for u in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(phi_inv(u), Err(Error::DomainError { .. })));
        }
    }

    #[test]
    fn cdf_matches_series() {
        for &x in &[-3.0, -1.2, 0.0, 0.4, 2.5] {
            assert!((phi(x) - phi_series(x)).abs() < 1e-10, "{x}");
        }
    }
}
