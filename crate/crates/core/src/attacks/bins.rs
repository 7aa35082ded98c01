use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corrmat::Scenario;
use crate::error::{Error, Result};

/// `B` equal-width bins over `[-1, 1]`; bin `b` (1-based) is
/// `[(2(b−1)−B)/B, (2b−B)/B)`, the last one closed at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinSpec {
    pub b: usize,
}

impl BinSpec {
    pub fn new(b: usize) -> Result<Self> {
        if b < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {b}")));
        }
        Ok(Self { b })
    }

    #[inline]
    pub fn lower(&self, bin: usize) -> f64 {
        (2.0 * (bin as f64 - 1.0) - self.b as f64) / self.b as f64
    }

    #[inline]
    pub fn upper(&self, bin: usize) -> f64 {
        (2.0 * bin as f64 - self.b as f64) / self.b as f64
    }

    /// Bin of `v`; values within `1e-12` outside `[-1, 1]` are clamped.
    pub fn bin_of(&self, v: f64) -> Result<usize> {
        if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::OutOfRange(v));
        }
        Ok((2..=self.b).rev().find(|&k| v >= self.lower(k)).unwrap_or(1))
    }

    /// Length of `iv ∩ bin`.
    pub fn coverage(&self, iv: &Interval, bin: usize) -> f64 {
        (iv.hi.min(self.upper(bin)) - iv.lo.max(self.lower(bin))).max(0.0)
    }
}

pub fn bin_of(v: f64, spec: BinSpec) -> Result<usize> {
    spec.bin_of(v)
}

/// Closed interval `[lo, hi]` of attainable target values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&lo)
            || !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&hi)
            || lo > hi
        {
            return Err(Error::InvalidMatrix(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self {
            lo: lo.clamp(-1.0, 1.0),
            hi: hi.clamp(-1.0, 1.0),
        })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Theoretical interval of the target entry for a scenario.
    pub fn of_scenario(s: &Scenario) -> Result<Self> {
        let (lo, hi) = s.target_bounds()?;
        Self::new(lo.min(hi), hi)
    }
}

/// `[cos(θ₁ + θ₂), cos(θ₁ − θ₂)]` with `θᵢ = arccos ρᵢ`.
pub fn closed_form_interval(rho1: f64, rho2: f64) -> Interval {
    let (lo, hi) = crate::corrmat::scenario_closed_form(rho1, rho2);
    Interval {
        lo: lo.clamp(-1.0, 1.0),
        hi: hi.clamp(-1.0, 1.0),
    }
}

/// What the model-less attack does when at least one bin is fully covered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C3Rule {
    /// Uniform among the fully covered bins.
    #[default]
    FullyCovered,
    /// Uniform among all `B` bins.
    AllBins,
}

/// Which rule decided a model-less guess.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelLessCase {
    C1,
    C2,
    C3,
}

/// Majority-bin guess from an interval.
pub fn model_less_predict<R: Rng + ?Sized>(iv: &Interval, spec: BinSpec, rng: &mut R) -> usize {
    model_less_predict_with(iv, spec, C3Rule::default(), rng).0
}

pub fn model_less_predict_with<R: Rng + ?Sized>(
    iv: &Interval,
    spec: BinSpec,
    rule: C3Rule,
    rng: &mut R,
) -> (usize, ModelLessCase) {
    let touched: Vec<usize> = (1..=spec.b)
        .filter(|&k| spec.coverage(iv, k) > 0.0)
        .collect();
    if touched.len() <= 1 {
        let bin = touched
            .first()
            .copied()
            .unwrap_or_else(|| spec.bin_of(iv.lo).unwrap_or(1));
        return (bin, ModelLessCase::C1);
    }
    let full: Vec<usize> = touched
        .iter()
        .copied()
        .filter(|&k| iv.lo <= spec.lower(k) && iv.hi >= spec.upper(k))
        .collect();
    if !full.is_empty() {
        let bin = match rule {
            C3Rule::FullyCovered => full[rng.random_range(0..full.len())],
            C3Rule::AllBins => rng.random_range(1..=spec.b),
        };
        return (bin, ModelLessCase::C3);
    }
    let mut best = touched[0];
    for &k in &touched[1..] {
        if spec.coverage(iv, k) > spec.coverage(iv, best) {
            best = k;
        }
    }
    (best, ModelLessCase::C2)
}

/// The single bin the target must fall into under S1 with `B = 3`, if the
/// constraints force one.
pub fn certain_region(rho1: f64, rho2: f64, spec: BinSpec) -> Result<Option<usize>> {
    if spec.b != 3 {
        return Err(Error::UnsupportedB(spec.b));
    }
    let t1 = rho1.clamp(-1.0, 1.0).acos();
    let t2 = rho2.clamp(-1.0, 1.0).acos();
    let diff = (t1 - t2).abs();
    let sum = t1 + t2;
    let pi = std::f64::consts::PI;
    let a_pos = (1.0f64 / 3.0).acos();
    let a_neg = (-1.0f64 / 3.0).acos();
    if diff >= a_neg {
        return Ok(Some(1));
    }
    let low = diff > a_pos && ((sum <= pi && sum <= a_neg) || (sum >= pi && sum >= pi + a_pos));
    if low {
        return Ok(Some(2));
    }
    let positive = (sum <= pi && sum < a_pos) || (sum >= pi && sum > pi + a_neg);
    if positive {
        return Ok(Some(3));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use rand::SeedableRng;

    fn b3() -> BinSpec {
        BinSpec::new(3).unwrap()
    }

    #[test]
    fn bin_examples() {
        assert_eq!(b3().bin_of(0.5).unwrap(), 3);
        assert_eq!(b3().bin_of(-1.0 / 3.0).unwrap(), 2);
        assert_eq!(b3().bin_of(1.0).unwrap(), 3);
        assert_eq!(b3().bin_of(-1.0).unwrap(), 1);
        assert_eq!(BinSpec::new(5).unwrap().bin_of(-0.9).unwrap(), 1);
        assert!(matches!(b3().bin_of(1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn closed_form_examples() {
        let iv = closed_form_interval(0.0, 0.0);
        assert!((iv.lo + 1.0).abs() < 1e-12 && (iv.hi - 1.0).abs() < 1e-12);
        let iv = closed_form_interval(1.0, 0.42);
        assert!((iv.lo - 0.42).abs() < 1e-12 && (iv.hi - 0.42).abs() < 1e-12);
        let iv = closed_form_interval(0.5, 0.5);
        assert!((iv.lo + 0.5).abs() < 1e-12 && (iv.hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_less_cases() {
        let mut rng = Stream::seed_from_u64(1);
        let iv = Interval::new(0.719, 1.0).unwrap();
        assert_eq!(model_less_predict_with(&iv, b3(), C3Rule::default(), &mut rng), (3, ModelLessCase::C1));
        let iv = Interval::new(-0.40, 0.20).unwrap();
        assert_eq!(model_less_predict_with(&iv, b3(), C3Rule::default(), &mut rng), (2, ModelLessCase::C2));
        // Exact tie between bins 2 and 3 goes to the lower one.
        let iv = Interval::new(0.0, 2.0 / 3.0).unwrap();
        assert_eq!(model_less_predict(&iv, b3(), &mut rng), 2);
    }

    #[test]
    fn full_range_is_uniform() {
        let mut rng = Stream::seed_from_u64(2);
        let iv = Interval::new(-1.0, 1.0).unwrap();
        for rule in [C3Rule::FullyCovered, C3Rule::AllBins] {
            let mut counts = [0usize; 3];
            for _ in 0..10_000 {
                counts[model_less_predict_with(&iv, b3(), rule, &mut rng).0 - 1] += 1;
            }
            // χ² with 2 degrees of freedom; 9.21 is the 1% critical value.
            let chi2: f64 = counts
                .iter()
                .map(|&c| (c as f64 - 10_000.0 / 3.0).powi(2) / (10_000.0 / 3.0))
                .sum();
            assert!(chi2 < 9.21, "{counts:?}");
        }
    }

    #[test]
    fn c3_rule_only_picks_covered_bins() {
        let mut rng = Stream::seed_from_u64(3);
        let iv = Interval::new(-0.5, 1.0).unwrap();
        for _ in 0..200 {
            let b = model_less_predict(&iv, b3(), &mut rng);
            assert!(b == 2 || b == 3);
        }
    }

    #[test]
    fn certain_region_examples() {
        assert_eq!(certain_region(0.95, 0.95, b3()).unwrap(), Some(3));
        assert_eq!(certain_region(0.95, -0.95, b3()).unwrap(), Some(1));
        assert_eq!(certain_region(0.98, 0.05, b3()).unwrap(), Some(2));
        assert_eq!(certain_region(-0.95, -0.95, b3()).unwrap(), Some(3));
        assert_eq!(certain_region(0.0, 0.0, b3()).unwrap(), None);
        assert!(matches!(
            certain_region(0.1, 0.1, BinSpec::new(5).unwrap()),
            Err(Error::UnsupportedB(5))
        ));
    }

    #[test]
    fn certain_region_agrees_with_model_less() {
        let mut rng = Stream::seed_from_u64(4);
        for _ in 0..10_000 {
            let r1: f64 = rng.random_range(-1.0..=1.0);
            let r2: f64 = rng.random_range(-1.0..=1.0);
            if let Some(bin) = certain_region(r1, r2, b3()).unwrap() {
                let iv = closed_form_interval(r1, r2);
                let (guess, case) =
                    model_less_predict_with(&iv, b3(), C3Rule::default(), &mut rng);
                assert_eq!(case, ModelLessCase::C1);
                assert_eq!(guess, bin);
            }
        }
    }
}
