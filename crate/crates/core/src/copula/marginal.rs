use rand::Rng;
use serde::{Deserialize, Serialize};

use super::normal::{phi, phi_inv};
use crate::error::{Error, Result};

/// Width in standard deviations attributed to a standard normal when a finite
/// support is needed (tolerances in attribute inference, tertile grids).
pub const NORMAL_SPAN: f64 = 8.0;

/// One-way distribution of a single variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalRepr", into = "MarginalRepr")]
pub enum Marginal {
    StandardNormal,
    Empirical(Discretized),
}

/// Piecewise-uniform distribution over `G` sub-intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretized {
    edges: Vec<f64>,
    masses: Vec<f64>,
    cum: Vec<f64>,
}

impl Discretized {
    /// `edges` has `G + 1` strictly increasing values, `masses` has `G`
    /// non-negative values summing to 1 within `1e-9`.
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || edges.len() != masses.len() + 1 {
            return Err(Error::ShapeMismatch {
                expected: masses.len() + 1,
                actual: edges.len(),
            });
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Schema("marginal edges must be strictly increasing".into()));
        }
        if masses.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Schema("marginal masses must be non-negative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Schema(format!("marginal masses sum to {total}, not 1")));
        }
        let mut cum = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for &p in &masses {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Self { edges, masses, cum })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn g(&self) -> usize {
        self.masses.len()
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        // First interval whose cumulative upper end reaches u; zero-mass
        // intervals are never selected.
        let g = self.cum[1..]
            .partition_point(|&c| c < u)
            .min(self.g() - 1);
        let p = self.masses[g];
        let frac = if p > 0.0 {
            ((u - self.cum[g]) / p).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.edges[g] + frac * (self.edges[g + 1] - self.edges[g])
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.edges[0] {
            return 0.0;
        }
        if x >= self.edges[self.g()] {
            return 1.0;
        }
        let g = self.edges.partition_point(|&e| e <= x) - 1;
        let frac = (x - self.edges[g]) / (self.edges[g + 1] - self.edges[g]);
        self.cum[g] + frac * self.masses[g]
    }

    fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(g, p)| p * 0.5 * (self.edges[g] + self.edges[g + 1]))
            .sum()
    }
}

impl Marginal {
    /// Uniform on `[lo, hi]`, stored as `g` equal-width intervals.
    pub fn uniform(lo: f64, hi: f64, g: usize) -> Result<Self> {
        let w = (hi - lo) / g as f64;
        let edges = (0..=g).map(|k| lo + w * k as f64).collect();
        Ok(Marginal::Empirical(Discretized::new(edges, vec![1.0 / g as f64; g])?))
    }

    pub fn is_standard_normal(&self) -> bool {
        matches!(self, Marginal::StandardNormal)
    }

    /// `F⁻¹(u)` for `u ∈ (0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::DomainError {
                value: u,
                domain: "(0, 1)",
            });
        }
        match self {
            Marginal::StandardNormal => phi_inv(u),
            Marginal::Empirical(d) => Ok(d.inverse_cdf(u)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::StandardNormal => phi(x),
            Marginal::Empirical(d) => d.cdf(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::StandardNormal => 0.0,
            Marginal::Empirical(d) => d.mean(),
        }
    }

    /// Support `[lo, hi]`; a standard normal is given `±NORMAL_SPAN / 2`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Marginal::StandardNormal => (-0.5 * NORMAL_SPAN, 0.5 * NORMAL_SPAN),
            Marginal::Empirical(d) => (d.edges[0], d.edges[d.g()]),
        }
    }

    pub fn span(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// Maps a latent standard-normal value through `F⁻¹ ∘ Φ`.
    #[inline]
    pub fn from_latent(&self, z: f64) -> f64 {
        match self {
            Marginal::StandardNormal => z,
            Marginal::Empirical(d) => {
                let u = phi(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                d.inverse_cdf(u)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return self.inverse_cdf(u).expect("u in (0, 1)");
            }
        }
    }

    /// `[lo, hi)` sub-intervals used to discretize this marginal into `g`
    /// cells: the stored intervals for an empirical marginal of the same
    /// size, equal-width cells over the support otherwise.
    pub fn cells(&self, g: usize) -> Vec<(f64, f64)> {
        if let Marginal::Empirical(d) = self {
            if d.g() == g {
                return d.edges.windows(2).map(|w| (w[0], w[1])).collect();
            }
        }
        let (lo, hi) = self.support();
        let w = (hi - lo) / g as f64;
        (0..g)
            .map(|k| (lo + w * k as f64, lo + w * (k + 1) as f64))
            .collect()
    }

    /// Probability mass of `[a, b)`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }
}

/// Fits `g` equal-width intervals spanning `[min, max]` of `samples`, with
/// masses equal to the empirical frequencies.
pub fn fit_marginal(samples: &[f64], g: usize) -> Result<Marginal> {
    if g < 1 {
        return Err(Error::Config("G must be positive".into()));
    }
    if samples.is_empty() {
        return Err(Error::TooFewRecords {
            needed: 1,
            actual: 0,
        });
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateSupport(lo));
    }
    let w = (hi - lo) / g as f64;
    let mut counts = vec![0usize; g];
    for &x in samples {
        let k = (((x - lo) / w) as usize).min(g - 1);
        counts[k] += 1;
    }
    let total = samples.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mut edges: Vec<f64> = (0..=g).map(|k| lo + w * k as f64).collect();
    edges[g] = hi;
    Ok(Marginal::Empirical(Discretized::new(edges, masses)?))
}

#[derive(Serialize, Deserialize)]
struct MarginalRepr {
    kind: String,
    #[serde(default)]
    edges: Vec<f64>,
    #[serde(default)]
    masses: Vec<f64>,
}

impl From<Marginal> for MarginalRepr {
    fn from(m: Marginal) -> Self {
        match m {
            Marginal::StandardNormal => MarginalRepr {
                kind: "StandardNormal".into(),
                edges: Vec::new(),
                masses: Vec::new(),
            },
            Marginal::Empirical(d) => MarginalRepr {
                kind: "Empirical".into(),
                edges: d.edges,
                masses: d.masses,
            },
        }
    }
}

impl TryFrom<MarginalRepr> for Marginal {
    type Error = Error;

    fn try_from(r: MarginalRepr) -> Result<Self> {
        match r.kind.as_str() {
            "StandardNormal" => Ok(Marginal::StandardNormal),
            "Empirical" => Ok(Marginal::Empirical(Discretized::new(r.edges, r.masses)?)),
            other => Err(Error::Schema(format!("unknown marginal kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use crate::testutil::ks_statistic;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn uniform_inverse_is_identity() {
        let m = Marginal::uniform(0.0, 1.0, 4).unwrap();
        assert!((m.inverse_cdf(0.625).unwrap() - 0.625).abs() < 1e-15);
        assert_eq!(Marginal::StandardNormal.inverse_cdf(0.5).unwrap(), 0.0);
        assert!(m.inverse_cdf(1.0).is_err());
    }

    #[test]
    fn fit_uniform_masses() {
        let mut rng = Stream::seed_from_u64(1);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let Marginal::Empirical(d) = fit_marginal(&xs, 100).unwrap() else {
            panic!()
        };
        assert!(d.masses().iter().all(|p| (p - 0.01).abs() < 0.005));
    }

    #[test]
    fn fit_normal_median() {
        let mut rng = Stream::seed_from_u64(2);
        let xs: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = fit_marginal(&xs, 100).unwrap();
        assert!(m.inverse_cdf(0.5).unwrap().abs() < 0.05);
    }

    #[test]
    fn fit_dominant_bin_and_degenerate() {
        let mut xs = vec![3.0; 999];
        xs.push(3.0 + 1e-6);
        let Marginal::Empirical(d) = fit_marginal(&xs, 10).unwrap() else {
            panic!()
        };
        assert!(d.masses()[0] > 0.99);
        assert!(matches!(
            fit_marginal(&[2.0, 2.0], 10),
            Err(Error::DegenerateSupport(_))
        ));
    }

    #[test]
    fn sampling_matches_cdf() {
        let mut rng = Stream::seed_from_u64(3);
        let m = Discretized::new(vec![-1.0, 0.0, 0.5, 3.0], vec![0.2, 0.5, 0.3]).unwrap();
        let m = Marginal::Empirical(m);
        let mut xs: Vec<f64> = (0..100_000).map(|_| m.sample(&mut rng)).collect();
        assert!(ks_statistic(&mut xs, |x| m.cdf(x)) < 0.01);
    }

    #[test]
    fn zero_mass_intervals_skipped() {
        let d = Discretized::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.5, 0.0, 0.5]).unwrap();
        let m = Marginal::Empirical(d);
        for k in 1..1000 {
            let x = m.inverse_cdf(k as f64 / 1000.0).unwrap();
            assert!(!(x > 1.0 && x < 2.0), "{x}");
        }
    }

    #[test]
    fn json_shape() {
        let m = Marginal::uniform(0.0, 1.0, 2).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"kind":"Empirical","edges":[0.0,0.5,1.0],"masses":[0.5,0.5]}"#);
        assert_eq!(serde_json::from_str::<Marginal>(&json).unwrap(), m);
        let n = serde_json::to_string(&Marginal::StandardNormal).unwrap();
        assert_eq!(serde_json::from_str::<Marginal>(&n).unwrap(), Marginal::StandardNormal);
        assert!(serde_json::from_str::<Marginal>(
            r#"{"kind":"Empirical","edges":[0.0,1.0],"masses":[0.7]}"#
        )
        .is_err());
    }
}
