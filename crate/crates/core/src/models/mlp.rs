use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Batch, TrainConfig};
use crate::copula::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeedTree;

/// Hidden layer widths of the fixed architecture.
pub const HIDDEN: [usize; 2] = [20, 10];

/// Fully connected layer; `w[i * n_out + o]` connects input `i` to output `o`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// ReLU network with a softmax head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

#[inline]
fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

impl Dense {
    #[inline]
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w[i * self.n_out..(i + 1) * self.n_out];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

impl Mlp {
    /// Weights and biases drawn from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let layers = sizes
            .windows(2)
            .map(|s| {
                let (n_in, n_out) = (s[0], s[1]);
                let a = 1.0 / (n_in as f64).sqrt();
                let mut draw = || a * (2.0 * rng.random::<f64>() - 1.0);
                let w = (0..n_in * n_out).map(|_| draw()).collect();
                let b = (0..n_out).map(|_| draw()).collect();
                Dense { n_in, n_out, w, b }
            })
            .collect();
        Self { layers }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].n_in];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().unwrap().n_out
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Class probabilities.
    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.n_out];
            layer.forward(&cur, &mut next);
            if k + 1 < self.layers.len() {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            cur = next;
        }
        softmax_in_place(&mut cur);
        cur
    }

    #[inline]
    pub fn prob1(&self, x: &[f64]) -> f64 {
        self.probs(x)[1]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs() {
            return Err(Error::ShapeMismatch {
                expected: self.n_inputs(),
                actual: x.len(),
            });
        }
        Ok(self.probs(x))
    }

    /// Layer by layer: weights (input-major), then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            v.extend_from_slice(&l.w);
            v.extend_from_slice(&l.b);
        }
        v
    }

    pub fn set_flat(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.n_params());
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&theta[k..k + nw]);
            k += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&theta[k..k + nb]);
            k += nb;
        }
    }

    /// Hidden neurons of each layer sorted by the sum of their incoming
    /// weights plus bias (ties by index); outgoing weights follow.
    pub fn canonical(&self) -> Mlp {
        let mut out = self.clone();
        for h in 0..out.layers.len() - 1 {
            let (left, right) = out.layers.split_at_mut(h + 1);
            let layer = &mut left[h];
            let next = &mut right[0];
            let scores: Vec<f64> = (0..layer.n_out)
                .map(|o| (0..layer.n_in).map(|i| layer.w[i * layer.n_out + o]).sum::<f64>() + layer.b[o])
                .collect();
            let mut perm: Vec<usize> = (0..layer.n_out).collect();
            perm.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
            let mut w = vec![0.0; layer.w.len()];
            for i in 0..layer.n_in {
                for (new, &old) in perm.iter().enumerate() {
                    w[i * layer.n_out + new] = layer.w[i * layer.n_out + old];
                }
            }
            layer.w = w;
            layer.b = perm.iter().map(|&o| layer.b[o]).collect();
            let mut nw = vec![0.0; next.w.len()];
            for (new, &old) in perm.iter().enumerate() {
                nw[new * next.n_out..(new + 1) * next.n_out]
                    .copy_from_slice(&next.w[old * next.n_out..(old + 1) * next.n_out]);
            }
            next.w = nw;
        }
        out
    }

    pub fn canonical_weights(&self) -> Vec<f64> {
        self.canonical().flatten()
    }

    /// Cross-entropy `−log p_y(x)`; adds its gradient (flatten order) to `grad`.
    pub fn accumulate_gradient(&self, x: &[f64], y: usize, ws: &mut Workspace, grad: &mut [f64]) -> f64 {
        let nl = self.layers.len();
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(x);
        for (k, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = ws.acts.split_at_mut(k + 1);
            let out = &mut rest[0];
            out.resize(layer.n_out, 0.0);
            layer.forward(&prev[k], out);
            if k + 1 < nl {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        softmax_in_place(&mut ws.acts[nl]);
        let loss = -ws.acts[nl][y].max(1e-300).ln();
        ws.delta.clear();
        ws.delta.extend_from_slice(&ws.acts[nl]);
        ws.delta[y] -= 1.0;
        let mut offsets = Vec::with_capacity(nl);
        let mut k = 0;
        for l in &self.layers {
            offsets.push(k);
            k += l.w.len() + l.b.len();
        }
        for li in (0..nl).rev() {
            let layer = &self.layers[li];
            let a = &ws.acts[li];
            let off = offsets[li];
            let (gw, gb) = grad[off..off + layer.w.len() + layer.b.len()].split_at_mut(layer.w.len());
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let row = &mut gw[i * layer.n_out..(i + 1) * layer.n_out];
                for (g, d) in row.iter_mut().zip(&ws.delta) {
                    *g += ai * d;
                }
            }
            for (g, d) in gb.iter_mut().zip(&ws.delta) {
                *g += d;
            }
            if li > 0 {
                ws.next_delta.clear();
                for (i, &ai) in a.iter().enumerate() {
                    if ai > 0.0 {
                        let row = &layer.w[i * layer.n_out..(i + 1) * layer.n_out];
                        ws.next_delta
                            .push(row.iter().zip(&ws.delta).map(|(w, d)| w * d).sum());
                    } else {
                        ws.next_delta.push(0.0);
                    }
                }
                std::mem::swap(&mut ws.delta, &mut ws.next_delta);
            }
        }
        loss
    }
}

/// Scratch buffers for [`Mlp::accumulate_gradient`].
#[derive(Default)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Workspace {
    pub fn new(model: &Mlp) -> Self {
        Self {
            acts: vec![Vec::new(); model.layers.len() + 1],
            delta: Vec::new(),
            next_delta: Vec::new(),
        }
    }
}

/// Outcome of [`fit_mlp`].
#[derive(Clone, Debug)]
pub struct MlpFit {
    pub model: Mlp,
    /// Best holdout accuracy, if a holdout was used.
    pub holdout_accuracy: Option<f64>,
    pub epochs: usize,
}

fn accuracy(model: &Mlp, inputs: &[f64], d: usize, labels: &[usize], idx: &[usize]) -> f64 {
    let correct = idx
        .iter()
        .filter(|&&i| {
            let p = model.probs(&inputs[i * d..(i + 1) * d]);
            argmax(&p) == labels[i]
        })
        .count();
    correct as f64 / idx.len() as f64
}

/// Index of the largest entry, ties to the highest index so that a binary
/// tie at 0.5 maps to class 1.
pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate().skip(1) {
        if v >= p[best] {
            best = k;
        }
    }
    best
}

/// Adam with optional L2 weight decay and early stopping on holdout accuracy.
pub fn fit_mlp(
    inputs: &[f64],
    d: usize,
    labels: &[usize],
    classes: usize,
    cfg: &TrainConfig,
) -> MlpFit {
    let tree = SeedTree::new(cfg.seed);
    let mut sizes = vec![d];
    sizes.extend(HIDDEN);
    sizes.push(classes);
    let mut model = Mlp::random(&sizes, &mut tree.named("init").stream());

    let m = labels.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut tree.named("split").stream());
    let n_hold = if cfg.holdout > 0.0 && m >= 10 {
        ((cfg.holdout * m as f64).round() as usize).clamp(1, m - 1)
    } else {
        0
    };
    let (hold, train) = order.split_at(n_hold);
    let mut train = train.to_vec();

    let np = model.n_params();
    let mut theta = model.flatten();
    let mut grad = vec![0.0; np];
    let mut m1 = vec![0.0; np];
    let mut m2 = vec![0.0; np];
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut t = 0i32;
    let mut ws = Workspace::new(&model);
    let mut shuffle_rng = tree.named("shuffle").stream();

    let mut best = (f64::NEG_INFINITY, theta.clone(), 0usize);
    let mut wait = 0;
    let mut epochs = 0;
    for epoch in 0..cfg.max_epochs {
        epochs = epoch + 1;
        let batch = match cfg.batch {
            Batch::Full => train.len(),
            Batch::Mini(b) => {
                train.shuffle(&mut shuffle_rng);
                b.max(1)
            }
        };
        for chunk in train.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                model.accumulate_gradient(&inputs[i * d..(i + 1) * d], labels[i], &mut ws, &mut grad);
            }
            let scale = 1.0 / chunk.len() as f64;
            t += 1;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for k in 0..np {
                let g = grad[k] * scale + cfg.weight_decay * theta[k];
                m1[k] = beta1 * m1[k] + (1.0 - beta1) * g;
                m2[k] = beta2 * m2[k] + (1.0 - beta2) * g * g;
                theta[k] -= cfg.learning_rate * (m1[k] / c1) / ((m2[k] / c2).sqrt() + eps);
            }
            model.set_flat(&theta);
        }
        if n_hold > 0 {
            let acc = accuracy(&model, inputs, d, labels, hold);
            if acc > best.0 {
                best = (acc, theta.clone(), epoch);
                wait = 0;
            } else {
                wait += 1;
                if wait >= cfg.patience {
                    break;
                }
            }
        }
    }
    if n_hold > 0 {
        model.set_flat(&best.1);
    }
    MlpFit {
        model,
        holdout_accuracy: (n_hold > 0).then_some(best.0),
        epochs,
    }
}

/// Trains the binary classifier on `data`.
pub fn train_mlp(data: &Dataset, cfg: &TrainConfig) -> Result<Mlp> {
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let labels: Vec<usize> = data.labels().iter().map(|&y| usize::from(y)).collect();
    Ok(fit_mlp(data.inputs(), data.d(), &labels, 2, cfg).model)
}
