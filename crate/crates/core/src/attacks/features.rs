use serde::{Deserialize, Serialize};

use crate::copula::Dataset;
use crate::error::{Error, Result};
use crate::models::Model;

/// What the target model reveals for each query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "digits", rename_all = "snake_case")]
pub enum FeatureMode {
    /// Full-precision class-1 confidence.
    #[default]
    Full,
    /// Confidence truncated to the given number of decimal digits.
    Rounded(u32),
    /// Predicted label only; a confidence of exactly 0.5 maps to 1.
    LabelOnly,
}

impl FeatureMode {
    #[inline]
    pub fn apply(&self, p: f64) -> f64 {
        match *self {
            FeatureMode::Full => p,
            FeatureMode::Rounded(d) => truncate(p, d),
            FeatureMode::LabelOnly => {
                if p >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureMode::Full => f.write_str("full"),
            FeatureMode::Rounded(d) => write!(f, "rounded({d})"),
            FeatureMode::LabelOnly => f.write_str("label_only"),
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "full" => return Ok(FeatureMode::Full),
            "label_only" | "label" => return Ok(FeatureMode::LabelOnly),
            _ => {}
        }
        s.strip_prefix("rounded(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|d| d.parse().ok())
            .map(FeatureMode::Rounded)
            .ok_or_else(|| Error::Config(format!("unknown feature mode {s:?}")))
    }
}

/// Truncates a value in `[0, 1]` to `d` decimal digits.
fn truncate(p: f64, d: u32) -> f64 {
    if d >= 17 {
        return p;
    }
    let scale = 10f64.powi(d as i32);
    let mut t = (p * scale).floor();
    // Guard against the product rounding up across an integer.
    if t / scale > p {
        t -= 1.0;
    }
    t / scale
}

/// Class-1 confidence of `model` on every query record, post-processed by `mode`.
pub fn extract_features(model: &Model, query: &Dataset, mode: FeatureMode) -> Result<Vec<f64>> {
    if query.d() != model.n_inputs() {
        return Err(Error::ShapeMismatch {
            expected: model.n_inputs(),
            actual: query.d(),
        });
    }
    Ok((0..query.m())
        .map(|i| mode.apply(model.prob1(query.row(i))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LogisticRegression;

    #[test]
    fn zero_model_features() {
        let model = Model::Lr(LogisticRegression::zeros(2));
        let q = Dataset::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]], vec![0, 1]).unwrap();
        assert_eq!(extract_features(&model, &q, FeatureMode::Full).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            extract_features(&model, &q, FeatureMode::LabelOnly).unwrap(),
            vec![1.0, 1.0]
        );
        let bad = Dataset::from_rows(&[vec![1.0]], vec![0]).unwrap();
        assert!(extract_features(&model, &bad, FeatureMode::Full).is_err());
    }

    #[test]
    fn truncation() {
        assert_eq!(FeatureMode::Rounded(1).apply(0.7342), 0.7);
        assert_eq!(FeatureMode::Rounded(2).apply(0.7399), 0.73);
        assert_eq!(FeatureMode::Rounded(0).apply(0.99), 0.0);
        assert_eq!(FeatureMode::Rounded(3).apply(0.125), 0.125);
        assert!((FeatureMode::Rounded(15).apply(0.1234567) - 0.1234567).abs() < 1e-15);
    }

    #[test]
    fn parse_and_display() {
        for m in [FeatureMode::Full, FeatureMode::Rounded(3), FeatureMode::LabelOnly] {
            assert_eq!(m.to_string().parse::<FeatureMode>().unwrap(), m);
        }
        assert!("rounded(x)".parse::<FeatureMode>().is_err());
    }
}
