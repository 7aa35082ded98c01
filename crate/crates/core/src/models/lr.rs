use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions};
use super::TrainConfig;
use crate::copula::Dataset;
use crate::error::{Error, Result};

/// Binary logistic regression `P(y = 1 | x) = σ(w·x + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[inline]
pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^s)` without overflow.
#[inline]
fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

impl LogisticRegression {
    pub fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            bias: 0.0,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    #[inline]
    pub fn prob1(&self, x: &[f64]) -> f64 {
        sigmoid(self.score(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.weights.len() {
            return Err(Error::ShapeMismatch {
                expected: self.weights.len(),
                actual: x.len(),
            });
        }
        let p = self.prob1(x);
        Ok([1.0 - p, p])
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v
    }
}

/// Mean log-loss plus `l2 / (2m) · ‖w‖²` (the intercept is not penalized),
/// and its gradient with respect to `(w, b)`.
pub fn lr_objective(
    inputs: &[f64],
    d: usize,
    targets: &[f64],
    l2: f64,
    theta: &[f64],
    grad: &mut [f64],
) -> f64 {
    let m = targets.len();
    let inv_m = 1.0 / m as f64;
    let (w, b) = theta.split_at(d);
    let b = b[0];
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let x = &inputs[i * d..(i + 1) * d];
        let s = w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b;
        loss += softplus(s) - y * s;
        let r = sigmoid(s) - y;
        for (g, v) in grad[..d].iter_mut().zip(x) {
            *g += r * v;
        }
        grad[d] += r;
    }
    let reg = l2 * inv_m;
    let mut penalty = 0.0;
    for k in 0..d {
        grad[k] = grad[k] * inv_m + reg * w[k];
        penalty += w[k] * w[k];
    }
    grad[d] *= inv_m;
    loss * inv_m + 0.5 * reg * penalty
}

/// Fits on raw row-major inputs and real targets in `[0, 1]`.
pub fn fit_lr(
    inputs: &[f64],
    d: usize,
    targets: &[f64],
    cfg: &TrainConfig,
) -> (LogisticRegression, Vec<f64>) {
    let opts = LbfgsOptions {
        max_iter: cfg.max_iter,
        gtol: cfg.tol,
        ..LbfgsOptions::default()
    };
    let res = minimize(
        |theta, grad| lr_objective(inputs, d, targets, cfg.l2, theta, grad),
        vec![0.0; d + 1],
        &opts,
    );
    let bias = res.x[d];
    let mut weights = res.x;
    weights.truncate(d);
    (LogisticRegression { weights, bias }, res.history)
}

/// Trains on every record of `data`.
pub fn train_lr(data: &Dataset, cfg: &TrainConfig) -> Result<LogisticRegression> {
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let targets: Vec<f64> = data.labels().iter().map(|&y| f64::from(y)).collect();
    Ok(fit_lr(data.inputs(), data.d(), &targets, cfg).0)
}
