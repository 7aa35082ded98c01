use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{s3_bounds, sample_s1, sample_s2, sample_s3, CorrMatrix};
use crate::error::{Error, Result};

/// How much the attacker knows about the correlations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    S1,
    S2,
    S3,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScenarioKind::S1 => "S1",
            ScenarioKind::S2 => "S2",
            ScenarioKind::S3 => "S3",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(ScenarioKind::S1),
            "S2" => Ok(ScenarioKind::S2),
            "S3" => Ok(ScenarioKind::S3),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Known correlations for one attack. Variables are ordered
/// `X_1, …, X_{n-1}, Y` and the target is always the `(0, 1)` entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Scenario {
    /// `ρ(X_1, Y)` and `ρ(X_2, Y)` only.
    S1 { n: usize, rho1: f64, rho2: f64 },
    /// `ρ(X_i, Y)` for every input.
    S2 { constraints: Vec<f64> },
    /// Every correlation except the target; the stored `(0, 1)` entry is ignored.
    S3 { known: CorrMatrix },
}

impl Scenario {
    pub fn n(&self) -> usize {
        match self {
            Scenario::S1 { n, .. } => *n,
            Scenario::S2 { constraints } => constraints.len() + 1,
            Scenario::S3 { known } => known.n(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::S1 { .. } => ScenarioKind::S1,
            Scenario::S2 { .. } => ScenarioKind::S2,
            Scenario::S3 { .. } => ScenarioKind::S3,
        }
    }

    /// The scenario an attacker of `kind` would hold against `truth`.
    pub fn from_truth(kind: ScenarioKind, truth: &CorrMatrix) -> Self {
        let n = truth.n();
        match kind {
            ScenarioKind::S1 => Scenario::S1 {
                n,
                rho1: truth.get(0, n - 1),
                rho2: truth.get(1, n - 1),
            },
            ScenarioKind::S2 => Scenario::S2 {
                constraints: (0..n - 1).map(|i| truth.get(i, n - 1)).collect(),
            },
            ScenarioKind::S3 => {
                let mut known = truth.clone();
                known.set_symmetric(0, 1, 0.0);
                Scenario::S3 { known }
            }
        }
    }

    /// Checks sizes and that every constraint lies in `[-1, 1]`.
    pub fn validate(&self) -> Result<()> {
        if self.n() < 3 {
            return Err(Error::Config(format!(
                "scenarios need n >= 3, got {}",
                self.n()
            )));
        }
        for v in self.values() {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(v));
            }
        }
        Ok(())
    }

    /// Positions `(i, j)`, `i < j`, of the known entries.
    pub fn known_positions(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        match self {
            Scenario::S1 { .. } => vec![(0, n - 1), (1, n - 1)],
            Scenario::S2 { .. } => (0..n - 1).map(|i| (i, n - 1)).collect(),
            Scenario::S3 { .. } => (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .filter(|&p| p != (0, 1))
                .collect(),
        }
    }

    /// Known values in the order of [`Scenario::known_positions`].
    pub fn values(&self) -> Vec<f64> {
        match self {
            Scenario::S1 { rho1, rho2, .. } => vec![*rho1, *rho2],
            Scenario::S2 { constraints } => constraints.clone(),
            Scenario::S3 { known } => self
                .known_positions()
                .into_iter()
                .map(|(i, j)| known.get(i, j))
                .collect(),
        }
    }

    /// Same scenario with the known values replaced.
    pub fn with_values(&self, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.known_positions().len());
        match self {
            Scenario::S1 { n, .. } => Scenario::S1 {
                n: *n,
                rho1: values[0],
                rho2: values[1],
            },
            Scenario::S2 { .. } => Scenario::S2 {
                constraints: values.to_vec(),
            },
            Scenario::S3 { known } => {
                let mut known = known.clone();
                for ((i, j), &v) in self.known_positions().into_iter().zip(values) {
                    known.set_symmetric(i, j, v);
                }
                Scenario::S3 { known }
            }
        }
    }

    /// Draws a matrix satisfying the constraints.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CorrMatrix> {
        match self {
            Scenario::S1 { n, rho1, rho2 } => Ok(sample_s1(*n, *rho1, *rho2, rng)),
            Scenario::S2 { constraints } => Ok(sample_s2(constraints.len() + 1, constraints, rng)),
            Scenario::S3 { known } => sample_s3(known, rng),
        }
    }

    /// Exact range of the target entry over all valid completions.
    pub fn target_bounds(&self) -> Result<(f64, f64)> {
        match self {
            Scenario::S1 { rho1, rho2, .. } => Ok(closed_form_bounds(*rho1, *rho2)),
            Scenario::S2 { constraints } => Ok(closed_form_bounds(constraints[0], constraints[1])),
            Scenario::S3 { known } => {
                let (m, l) = s3_bounds(known)?;
                Ok(((m - l).max(-1.0), (m + l).min(1.0)))
            }
        }
    }
}

/// `[cos(θ₁ + θ₂), cos(θ₁ − θ₂)]` with `θᵢ = arccos ρᵢ`.
pub(crate) fn closed_form_bounds(rho1: f64, rho2: f64) -> (f64, f64) {
    let t1 = rho1.clamp(-1.0, 1.0).acos();
    let t2 = rho2.clamp(-1.0, 1.0).acos();
    ((t1 + t2).cos(), (t1 - t2).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use rand::SeedableRng;

    #[test]
    fn positions_and_values_round_trip() {
        let mut rng = Stream::seed_from_u64(1);
        let truth = super::super::sample_corr_matrix(5, &mut rng);
        for kind in [ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3] {
            let s = Scenario::from_truth(kind, &truth);
            assert_eq!(s.n(), 5);
            assert_eq!(s.kind(), kind);
            let vals = s.values();
            for ((i, j), v) in s.known_positions().into_iter().zip(&vals) {
                assert_eq!(truth.get(i, j), *v);
            }
            assert_eq!(s.with_values(&vals), s);
            let (lo, hi) = s.target_bounds().unwrap();
            assert!(lo - 1e-9 <= truth.get(0, 1) && truth.get(0, 1) <= hi + 1e-9);
            let c = s.sample(&mut rng).unwrap();
            for (i, j) in s.known_positions() {
                assert_eq!(c.get(i, j), truth.get(i, j));
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let (lo, hi) = closed_form_bounds(0.5, 0.5);
        assert!((lo + 0.5).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let (lo, hi) = closed_form_bounds(1.0, 0.3);
        assert!((lo - 0.3).abs() < 1e-12 && (hi - 0.3).abs() < 1e-12);
    }

    #[test]
    fn serde_tagged() {
        let s = Scenario::S1 {
            n: 3,
            rho1: 0.5,
            rho2: -0.25,
        };
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"S1\""));
        assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), s);
        assert!(Scenario::S2 {
            constraints: vec![0.2, 1.5]
        }
        .validate()
        .is_err());
    }
}
