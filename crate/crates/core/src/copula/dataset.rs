use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corrmat::{fmt17, CorrMatrix};
use crate::error::{Error, Result};

/// How a continuous output column is binarized into the label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum ThresholdRule {
    Zero,
    Median,
    Mean,
    Fixed(f64),
}

impl ThresholdRule {
    /// Threshold for `values`; label is 1 iff a value is strictly above it.
    pub fn threshold(&self, values: &[f64]) -> f64 {
        match *self {
            ThresholdRule::Zero => 0.0,
            ThresholdRule::Fixed(c) => c,
            ThresholdRule::Mean => values.iter().sum::<f64>() / values.len() as f64,
            ThresholdRule::Median => median(values),
        }
    }

    pub fn binarize(&self, values: &[f64]) -> Vec<u8> {
        let t = self.threshold(values);
        values.iter().map(|&v| u8::from(v > t)).collect()
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `m` records of `d = n − 1` real inputs and one binary label.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    d: usize,
    inputs: Vec<f64>,
    labels: Vec<u8>,
    provenance: Option<CorrMatrix>,
}

impl Dataset {
    /// `inputs` is row-major with `d` values per record.
    pub fn new(d: usize, inputs: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if d == 0 || inputs.len() != d * labels.len() {
            return Err(Error::ShapeMismatch {
                expected: d * labels.len(),
                actual: inputs.len(),
            });
        }
        if let Some(pos) = inputs.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / d,
                column: pos % d,
                message: "non-finite input".into(),
            });
        }
        if let Some(row) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Parse {
                row,
                column: d,
                message: "label must be 0 or 1".into(),
            });
        }
        Ok(Self {
            d,
            inputs,
            labels,
            provenance: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::ShapeMismatch {
                expected: d,
                actual: bad.len(),
            });
        }
        Self::new(d, rows.concat(), labels)
    }

    pub(crate) fn from_parts_unchecked(d: usize, inputs: Vec<f64>, labels: Vec<u8>) -> Self {
        Self {
            d,
            inputs,
            labels,
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, c: CorrMatrix) -> Self {
        self.provenance = Some(c);
        self
    }

    pub fn provenance(&self) -> Option<&CorrMatrix> {
        self.provenance.as_ref()
    }

    /// Number of records.
    pub fn m(&self) -> usize {
        self.labels.len()
    }

    /// Number of inputs.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of variables including the label.
    pub fn n(&self) -> usize {
        self.d + 1
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Column `j`; `j == d` yields the labels as 0/1 reals.
    pub fn column(&self, j: usize) -> Vec<f64> {
        if j == self.d {
            self.labels.iter().map(|&y| f64::from(y)).collect()
        } else {
            (0..self.m()).map(|i| self.inputs[i * self.d + j]).collect()
        }
    }

    pub fn has_both_classes(&self) -> bool {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        ones > 0 && ones < self.m()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(idx.len() * self.d);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            inputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            d: self.d,
            inputs,
            labels,
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps only the listed input columns, in that order.
    pub fn select_inputs(&self, cols: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(self.m() * cols.len());
        for i in 0..self.m() {
            let row = self.row(i);
            inputs.extend(cols.iter().map(|&c| row[c]));
        }
        Self {
            d: cols.len(),
            inputs,
            labels: self.labels.clone(),
            provenance: None,
        }
    }

    /// Appends the records of `other`.
    pub fn extend(&mut self, other: &Dataset) {
        assert_eq!(self.d, other.d);
        self.inputs.extend_from_slice(&other.inputs);
        self.labels.extend_from_slice(&other.labels);
        self.provenance = None;
    }

    /// Pearson correlation between variables `i` and `j` (label is `d`).
    pub fn corr(&self, i: usize, j: usize) -> Result<f64> {
        let a = self.column(i);
        let b = self.column(j);
        pearson(&a, &b).ok_or(Error::ZeroVariance {
            column: if variance(&a) > 0.0 { j } else { i },
        })
    }

    /// Headerless CSV: inputs then label, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        let mut rec: Vec<String> = Vec::with_capacity(self.n());
        for i in 0..self.m() {
            rec.clear();
            rec.extend(self.row(i).iter().map(|&v| fmt17(v)));
            rec.push(self.labels[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        let mut d = None;
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let width = rec.len();
            if width < 2 {
                return Err(Error::Parse {
                    row,
                    column: 0,
                    message: "need at least one input and a label".into(),
                });
            }
            if *d.get_or_insert(width - 1) != width - 1 {
                return Err(Error::ShapeMismatch {
                    expected: d.unwrap() + 1,
                    actual: width,
                });
            }
            for (column, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|e: std::num::ParseFloatError| {
                    Error::Parse {
                        row,
                        column,
                        message: e.to_string(),
                    }
                })?;
                if column + 1 == width {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::Parse {
                            row,
                            column,
                            message: format!("label {v} is not 0 or 1"),
                        });
                    }
                    labels.push(v as u8);
                } else {
                    inputs.push(v);
                }
            }
        }
        Self::new(d.unwrap_or(0), inputs, labels)
    }
}

fn variance(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
}

/// Sample Pearson coefficient; `None` if either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}
