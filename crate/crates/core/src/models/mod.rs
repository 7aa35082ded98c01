//! Binary classifiers trained from scratch: logistic regression and a
//! `[d, 20, 10, 2]` ReLU network.

pub mod lbfgs;
mod lr;
mod mlp;

pub use lr::{fit_lr, lr_objective, train_lr, LogisticRegression};
pub use mlp::{fit_mlp, train_mlp, Dense, Mlp, MlpFit, Workspace, HIDDEN};
pub(crate) use lr::sigmoid;
pub(crate) use mlp::argmax;

use serde::{Deserialize, Serialize};

use crate::copula::Dataset;
use crate::error::{Error, Result};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(ModelKind::Lr),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Batch {
    Full,
    Mini(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub holdout: f64,
    pub batch: Batch,
    pub seed: u64,
    pub weight_decay: f64,
    /// Inverse regularization strength of logistic regression is `1 / l2`.
    pub l2: f64,
    /// Gradient tolerance of the logistic-regression solver.
    pub tol: f64,
    /// Iteration cap of the logistic-regression solver.
    pub max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 100,
            patience: 5,
            holdout: 0.1,
            batch: Batch::Full,
            seed: 0,
            weight_decay: 0.0,
            l2: 1.0,
            tol: 1e-4,
            max_iter: 100,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) || !(self.tol > 0.0) {
            return Err(Error::Config("training rates must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config("patience exceeds max_epochs".into()));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::Config("holdout fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A trained binary classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Lr(LogisticRegression),
    Mlp(Mlp),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    version: u32,
    n_inputs: usize,
    model: Model,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lr(_) => ModelKind::Lr,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn n_inputs(&self) -> usize {
        match self {
            Model::Lr(m) => m.n_inputs(),
            Model::Mlp(m) => m.n_inputs(),
        }
    }

    /// `P(y = 1 | x)` without shape checks.
    #[inline]
    pub fn prob1(&self, x: &[f64]) -> f64 {
        match self {
            Model::Lr(m) => m.prob1(x),
            Model::Mlp(m) => m.prob1(x),
        }
    }

    /// `(P(y = 0 | x), P(y = 1 | x))`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        match self {
            Model::Lr(m) => m.predict_proba(x),
            Model::Mlp(m) => {
                let p = m.predict_proba(x)?;
                Ok([p[0], p[1]])
            }
        }
    }

    /// Predicted class; a probability of exactly 0.5 maps to 1.
    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.prob1(x) >= 0.5)
    }

    pub fn flatten_weights(&self) -> Vec<f64> {
        match self {
            Model::Lr(m) => m.flatten(),
            Model::Mlp(m) => m.flatten(),
        }
    }

    /// Canonically sorted weights for networks; plain weights otherwise.
    pub fn canonical_weights(&self) -> Vec<f64> {
        match self {
            Model::Lr(m) => m.flatten(),
            Model::Mlp(m) => m.canonical_weights(),
        }
    }

    /// Equivalent model taking inputs in the order `perm`: the result on
    /// `x'` with `x'[k] = x[perm[k]]` equals this model on `x`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Model {
        match self {
            Model::Lr(m) => Model::Lr(LogisticRegression {
                weights: perm.iter().map(|&p| m.weights[p]).collect(),
                bias: m.bias,
            }),
            Model::Mlp(m) => {
                let mut out = m.clone();
                let first = &m.layers[0];
                let w = &mut out.layers[0].w;
                for (k, &p) in perm.iter().enumerate() {
                    w[k * first.n_out..(k + 1) * first.n_out]
                        .copy_from_slice(&first.w[p * first.n_out..(p + 1) * first.n_out]);
                }
                Model::Mlp(out)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Envelope {
            version: MODEL_FORMAT_VERSION,
            n_inputs: self.n_inputs(),
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text)?;
        if env.version != MODEL_FORMAT_VERSION {
            return Err(Error::Version(env.version));
        }
        if env.model.n_inputs() != env.n_inputs {
            return Err(Error::ShapeMismatch {
                expected: env.n_inputs,
                actual: env.model.n_inputs(),
            });
        }
        if let Model::Mlp(m) = &env.model {
            for l in &m.layers {
                if l.w.len() != l.n_in * l.n_out || l.b.len() != l.n_out {
                    return Err(Error::Schema("layer shapes do not match".into()));
                }
            }
            if m.layers.windows(2).any(|w| w[0].n_out != w[1].n_in) {
                return Err(Error::Schema("consecutive layers do not chain".into()));
            }
        }
        Ok(env.model)
    }
}

/// Trains a classifier of the given kind on all of `data`.
pub fn train(kind: ModelKind, data: &Dataset, cfg: &TrainConfig) -> Result<Model> {
    match kind {
        ModelKind::Lr => Ok(Model::Lr(train_lr(data, cfg)?)),
        ModelKind::Mlp => Ok(Model::Mlp(train_mlp(data, cfg)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use rand::SeedableRng;

    #[test]
    fn lr_flatten_order() {
        let m = Model::Lr(LogisticRegression {
            weights: vec![0.2, -0.1],
            bias: 0.3,
        });
        assert_eq!(m.flatten_weights(), vec![0.2, -0.1, 0.3]);
        assert_eq!(m.predict(&[0.0, 3.0]), 1);
    }

    #[test]
    fn json_round_trip_and_version_guard() {
        let mlp = Mlp::random(&[3, 20, 10, 2], &mut Stream::seed_from_u64(1));
        let m = Model::Mlp(mlp);
        let json = m.to_json().unwrap();
        assert_eq!(Model::from_json(&json).unwrap(), m);
        let bumped = json.replace("\"version\":1", "\"version\":9");
        assert!(matches!(Model::from_json(&bumped), Err(Error::Version(9))));
        let lr = Model::Lr(LogisticRegression {
            weights: vec![1.0 / 3.0],
            bias: -2.0e-17,
        });
        assert_eq!(Model::from_json(&lr.to_json().unwrap()).unwrap(), lr);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mlp = Model::Mlp(Mlp::random(&[2, 20, 10, 2], &mut Stream::seed_from_u64(2)));
        for x in [[0.0, 0.0], [10.0, -4.0], [-50.0, 80.0]] {
            let p = mlp.predict_proba(&x).unwrap();
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(mlp.predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn permuted_inputs_preserve_outputs() {
        let mut rng = Stream::seed_from_u64(3);
        let perm = [2, 0, 1];
        for m in [
            Model::Mlp(Mlp::random(&[3, 20, 10, 2], &mut rng)),
            Model::Lr(LogisticRegression {
                weights: vec![0.5, -1.0, 2.0],
                bias: 0.1,
            }),
        ] {
            let p = m.permute_inputs(&perm);
            let x = [0.3, -1.2, 0.8];
            let xp: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            assert!((m.prob1(&x) - p.prob1(&xp)).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            patience: 200,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
