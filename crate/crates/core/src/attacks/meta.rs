use std::io::{Read, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corrmat::fmt17;
use crate::error::{Error, Result};
use crate::models::{argmax, fit_lr, fit_mlp, sigmoid, Batch, LogisticRegression, Mlp, ModelKind, TrainConfig};
use crate::rng::SeedTree;

/// Feature vectors of shadow models paired with correlation bins (1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct MetaDataset {
    q: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl MetaDataset {
    pub fn new(q: usize) -> Self {
        Self {
            q,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, features: &[f64], label: usize) {
        assert_eq!(features.len(), self.q, "feature length");
        self.features.extend_from_slice(features);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.q..(i + 1) * self.q]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut out = Self::new(self.q);
        for &i in idx {
            out.push(self.row(i), self.labels[i]);
        }
        out
    }

    /// Headerless CSV: `q` feature columns then the label.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|&v| fmt17(v)).collect();
            rec.push(self.labels[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut out: Option<Self> = None;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let q = rec.len().saturating_sub(1);
            let ds = out.get_or_insert_with(|| Self::new(q));
            if q != ds.q {
                return Err(Error::ShapeMismatch {
                    expected: ds.q + 1,
                    actual: rec.len(),
                });
            }
            let parse_err = |column: usize, message: String| Error::Parse {
                row,
                column,
                message,
            };
            let mut feats = Vec::with_capacity(q);
            for (c, f) in rec.iter().take(q).enumerate() {
                feats.push(f.trim().parse::<f64>().map_err(|e| parse_err(c, e.to_string()))?);
            }
            let label = rec[q]
                .trim()
                .parse::<usize>()
                .map_err(|e| parse_err(q, e.to_string()))?;
            ds.push(&feats, label);
        }
        Ok(out.unwrap_or_else(|| Self::new(0)))
    }
}

/// Hyperparameters of the meta-classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub kind: ModelKind,
    pub train: TrainConfig,
    /// Fraction of shadows held out to report meta accuracy.
    pub holdout: f64,
}

impl MetaConfig {
    /// LR meta for LR targets; Adam-trained MLP meta for MLP targets.
    pub fn for_target(kind: ModelKind) -> Self {
        let train = match kind {
            ModelKind::Lr => TrainConfig::default(),
            ModelKind::Mlp => TrainConfig {
                learning_rate: 0.001,
                batch: Batch::Mini(128),
                weight_decay: 0.01,
                patience: 10,
                holdout: 0.1,
                ..TrainConfig::default()
            },
        };
        Self {
            kind,
            train,
            holdout: 0.1,
        }
    }
}

/// Maps a feature vector to a bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetaClassifier {
    /// One-vs-rest logistic regressions, one per class seen in training.
    OneVsRest {
        classes: Vec<usize>,
        models: Vec<LogisticRegression>,
    },
    Mlp {
        model: Mlp,
    },
}

impl MetaClassifier {
    pub fn predict(&self, features: &[f64]) -> usize {
        match self {
            MetaClassifier::OneVsRest { classes, models } => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (k, m) in models.iter().enumerate() {
                    let s = sigmoid(m.score(features));
                    if s > best_score {
                        best_score = s;
                        best = k;
                    }
                }
                classes[best]
            }
            MetaClassifier::Mlp { model } => argmax(&model.probs(features)) + 1,
        }
    }

    pub fn accuracy(&self, data: &MetaDataset) -> f64 {
        if data.is_empty() {
            return f64::NAN;
        }
        let hits = (0..data.len())
            .filter(|&i| self.predict(data.row(i)) == data.labels()[i])
            .count();
        hits as f64 / data.len() as f64
    }
}

/// A trained meta-classifier and its accuracy on the held-out shadows.
#[derive(Clone, Debug)]
pub struct MetaFit {
    pub classifier: MetaClassifier,
    pub holdout_accuracy: f64,
}

/// Distinct labels of `labels`, ascending.
fn classes_of(labels: &[usize]) -> Vec<usize> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Fits on every row of `data`.
pub fn fit_meta(data: &MetaDataset, b: usize, cfg: &MetaConfig) -> Result<MetaClassifier> {
    let classes = classes_of(data.labels());
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(classes.first().copied().unwrap_or(0)));
    }
    match cfg.kind {
        ModelKind::Lr => {
            let models = classes
                .iter()
                .map(|&c| {
                    let targets: Vec<f64> = data
                        .labels()
                        .iter()
                        .map(|&l| f64::from(u8::from(l == c)))
                        .collect();
                    fit_lr(&data.features, data.q, &targets, &cfg.train).0
                })
                .collect();
            Ok(MetaClassifier::OneVsRest { classes, models })
        }
        ModelKind::Mlp => {
            let labels: Vec<usize> = data.labels().iter().map(|&l| l - 1).collect();
            let fit = fit_mlp(&data.features, data.q, &labels, b, &cfg.train);
            Ok(MetaClassifier::Mlp { model: fit.model })
        }
    }
}

/// Shuffles with `tree`, fits on `1 − holdout` of the rows and reports
/// accuracy on the rest.
pub fn train_meta(data: &MetaDataset, b: usize, cfg: &MetaConfig, tree: &SeedTree) -> Result<MetaFit> {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut tree.named("meta-split").stream());
    let n_hold = if data.len() >= 10 {
        ((cfg.holdout * data.len() as f64).round() as usize).min(data.len() - 2)
    } else {
        0
    };
    let (hold, train) = idx.split_at(n_hold);
    let mut train = train.to_vec();
    train.sort_unstable();
    let train_set = data.subset(&train);
    let classes = classes_of(train_set.labels());
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(classes.first().copied().unwrap_or(0)));
    }
    let mut mcfg = cfg.clone();
    mcfg.train.seed = tree.named("meta-train").seed_u64();
    let classifier = fit_meta(&train_set, b, &mcfg)?;
    let holdout_accuracy = classifier.accuracy(&data.subset(hold));
    Ok(MetaFit {
        classifier,
        holdout_accuracy,
    })
}
