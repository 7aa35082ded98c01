//! Dataset loaders and preprocessing.
//!
//! Real datasets are not bundled; each loader reads the publicly
//! distributed file and applies that dataset's preprocessing. A synthetic
//! stand-in with skewed marginals is available when no file is given.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::copula::{fit_marginal, sample_copula, Dataset, Discretized, Marginal, ThresholdRule};
use crate::corrmat::sample_corr_matrix;
use crate::error::{Error, Result};
use crate::rng::SeedTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoaderName {
    Fifa19,
    Communities,
    Musk,
    Csv,
    Synthetic,
}

impl std::str::FromStr for LoaderName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::Config(format!("unknown loader {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoaderOptions {
    /// Input columns; all remaining numeric columns when absent.
    pub inputs: Option<Vec<String>>,
    /// Output column.
    pub output: Option<String>,
    pub threshold: Option<ThresholdRule>,
    /// Records kept after preprocessing, sampled without replacement.
    pub max_records: Option<usize>,
}

/// A preprocessed dataset with its input column names.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub data: Dataset,
    pub columns: Vec<String>,
}

impl LoadedData {
    /// Fitted `G`-interval marginals of the input columns.
    pub fn marginals(&self, g: usize) -> Result<Vec<Marginal>> {
        (0..self.data.d())
            .map(|j| fit_marginal(&self.data.column(j), g))
            .collect()
    }
}

struct Table {
    names: Vec<String>,
    cells: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(false)
            .from_path(path)?;
        let mut names: Vec<String> = if has_header {
            rdr.headers()?.iter().map(|h| h.trim().to_string()).collect()
        } else {
            Vec::new()
        };
        let mut cells = Vec::new();
        for rec in rdr.records() {
            cells.push(rec?.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
        }
        if names.is_empty() {
            let width = cells.first().map_or(0, Vec::len);
            names = (0..width).map(|j| format!("c{j}")).collect();
        }
        Ok(Self { names, cells })
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    }
}

/// `Ok(None)` for a missing value, `Err` for text that is not a number.
fn parse_cell(s: &str) -> std::result::Result<Option<f64>, String> {
    match s {
        "" | "?" | "NA" | "NaN" | "nan" => Ok(None),
        _ => s.parse::<f64>().map(Some).map_err(|e| format!("{s:?}: {e}")),
    }
}

/// Drops records with a missing value in any of `cols` and parses them;
/// non-numeric text is a parse error.
fn numeric_rows(table: &Table, cols: &[usize], convert: impl Fn(usize, &str) -> String) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(table.cells.len());
    'rows: for (r, row) in table.cells.iter().enumerate() {
        let mut vals = Vec::with_capacity(cols.len());
        for &c in cols {
            let text = convert(c, &row[c]);
            match parse_cell(&text) {
                Ok(Some(v)) => vals.push(v),
                Ok(None) => continue 'rows,
                Err(message) => {
                    return Err(Error::Parse {
                        row: r,
                        column: c,
                        message,
                    })
                }
            }
        }
        out.push(vals);
    }
    Ok(out)
}

/// Columns whose every non-missing cell parses after `convert`.
fn numeric_columns(table: &Table, convert: &impl Fn(usize, &str) -> String) -> Vec<usize> {
    (0..table.names.len())
        .filter(|&c| {
            table
                .cells
                .iter()
                .all(|row| parse_cell(&convert(c, &row[c])).is_ok())
        })
        .collect()
}

/// Columns without a missing value.
fn complete_columns(table: &Table, cols: &[usize]) -> Vec<usize> {
    cols.iter()
        .copied()
        .filter(|&c| table.cells.iter().all(|row| !matches!(parse_cell(&row[c]), Ok(None))))
        .collect()
}

fn zero_variance(values: impl Iterator<Item = f64>) -> bool {
    let mut it = values;
    let Some(first) = it.next() else {
        return true;
    };
    it.all(|v| v == first)
}

/// Builds a dataset from parsed rows whose last column is the output.
fn assemble(rows: Vec<Vec<f64>>, names: Vec<String>, rule: ThresholdRule, strict: bool) -> Result<LoadedData> {
    let d = names.len();
    if rows.is_empty() {
        return Err(Error::TooFewRecords { needed: 1, actual: 0 });
    }
    let mut keep = Vec::with_capacity(d);
    for (j, name) in names.iter().enumerate() {
        if zero_variance(rows.iter().map(|r| r[j])) {
            if strict {
                return Err(Error::Schema(format!("column {name:?} has zero variance")));
            }
            log::info!("dropping constant column {name:?}");
        } else {
            keep.push(j);
        }
    }
    let out: Vec<f64> = rows.iter().map(|r| r[d]).collect();
    let labels = rule.binarize(&out);
    let mut inputs = Vec::with_capacity(rows.len() * keep.len());
    for r in &rows {
        inputs.extend(keep.iter().map(|&j| r[j]));
    }
    Ok(LoadedData {
        data: Dataset::new(keep.len(), inputs, labels)?,
        columns: keep.iter().map(|&j| names[j].clone()).collect(),
    })
}

/// Keeps `max` records sampled without replacement, in file order.
fn subsample(loaded: LoadedData, max: Option<usize>, tree: &SeedTree) -> LoadedData {
    match max {
        Some(max) if max < loaded.data.m() => {
            let mut idx = index::sample(&mut tree.named("subsample").stream(), loaded.data.m(), max).into_vec();
            idx.sort_unstable();
            LoadedData {
                data: loaded.data.subset(&idx),
                columns: loaded.columns,
            }
        }
        _ => loaded,
    }
}

/// Generic CSV with a header row, explicit output column and optional
/// input list. Constant inputs are a schema error.
pub fn load_csv(path: &Path, opts: &LoaderOptions) -> Result<LoadedData> {
    let table = Table::read(path, true)?;
    let output = opts
        .output
        .as_deref()
        .ok_or_else(|| Error::Config("the csv loader needs an output column".into()))?;
    let out_idx = table.index_of(output)?;
    let inputs: Vec<String> = match &opts.inputs {
        Some(cols) => cols.clone(),
        None => table.names.iter().filter(|n| *n != output).cloned().collect(),
    };
    let unknown: Vec<&String> = inputs.iter().filter(|c| !table.names.contains(c)).collect();
    if !unknown.is_empty() {
        return Err(Error::Schema(format!("unknown columns {unknown:?}")));
    }
    let mut cols: Vec<usize> = inputs.iter().map(|c| table.index_of(c)).collect::<Result<_>>()?;
    cols.push(out_idx);
    let rows = numeric_rows(&table, &cols, |_, s| s.to_string())?;
    assemble(rows, inputs, opts.threshold.unwrap_or(ThresholdRule::Median), true)
}

/// `€110.5M` → 110.5e6, `€565K` → 565e3.
fn money(s: &str) -> String {
    let t = s.trim_start_matches('€');
    let (num, mult) = match t.chars().last() {
        Some('M') => (&t[..t.len() - 1], 1e6),
        Some('K') => (&t[..t.len() - 1], 1e3),
        _ => (t, 1.0),
    };
    match num.parse::<f64>() {
        Ok(v) => format!("{}", v * mult),
        Err(_) => s.to_string(),
    }
}

/// Height `5'7` → inches, weight `159lbs` → pounds, skill `88+2` → 90.
fn fifa_cell(name: &str, s: &str) -> String {
    if s.is_empty() {
        return String::new();
    }
    match name {
        "Value" | "Wage" | "Release Clause" => money(s),
        "Height" => match s.split_once('\'') {
            Some((ft, inch)) => match (ft.parse::<f64>(), inch.parse::<f64>()) {
                (Ok(f), Ok(i)) => format!("{}", 12.0 * f + i),
                _ => s.to_string(),
            },
            None => s.to_string(),
        },
        "Weight" => s.trim_end_matches("lbs").to_string(),
        _ => match s.split_once('+') {
            Some((a, b)) => match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(a), Ok(b)) => format!("{}", a + b),
                _ => s.to_string(),
            },
            None => s.to_string(),
        },
    }
}

/// FIFA 19 player data: output `Value` binarized at the median, identifier
/// and value-predictive columns removed, categorical columns dropped,
/// incomplete records removed, duplicate columns removed.
pub fn load_fifa19(path: &Path, opts: &LoaderOptions, tree: &SeedTree) -> Result<LoadedData> {
    let table = Table::read(path, true)?;
    let out_idx = table.index_of(opts.output.as_deref().unwrap_or("Value"))?;
    let excluded = ["", "Unnamed: 0", "ID", "Jersey Number", "Wage", "Release Clause"];
    let names = table.names.clone();
    let convert = |c: usize, s: &str| fifa_cell(&names[c], s);
    let mut cols: Vec<usize> = numeric_columns(&table, &convert)
        .into_iter()
        .filter(|&c| c != out_idx && !excluded.contains(&table.names[c].as_str()))
        .collect();
    cols.push(out_idx);
    let rows = numeric_rows(&table, &cols, convert)?;
    // Duplicate attributes: identical columns after preprocessing.
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut keep = Vec::new();
    for j in 0..cols.len() - 1 {
        if seen.insert(rows.iter().map(|r| r[j].to_bits()).collect()) {
            keep.push(j);
        }
    }
    keep.push(cols.len() - 1);
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
    let names: Vec<String> = keep[..keep.len() - 1]
        .iter()
        .map(|&j| table.names[cols[j]].clone())
        .collect();
    let loaded = assemble(rows, names, opts.threshold.unwrap_or(ThresholdRule::Median), false)?;
    Ok(subsample(loaded, opts.max_records.or(Some(2000)), tree))
}

/// Crime columns other than the output, excluded as predictive of it.
const CRIME_COLUMNS: [&str; 17] = [
    "murdPerPop",
    "rapes",
    "rapesPerPop",
    "robberies",
    "robbbPerPop",
    "assaults",
    "assaultPerPop",
    "burglaries",
    "burglPerPop",
    "larcenies",
    "larcPerPop",
    "autoTheft",
    "autoTheftPerPop",
    "arsons",
    "arsonsPerPop",
    "ViolentCrimesPerPop",
    "nonViolPerPop",
];

/// Communities and Crime (unnormalized, with a header row): output
/// `murders` with label 1 iff at least one murder; inputs are the numeric
/// columns without missing values.
pub fn load_communities(path: &Path, opts: &LoaderOptions, tree: &SeedTree) -> Result<LoadedData> {
    let table = Table::read(path, true)?;
    let out_idx = table.index_of(opts.output.as_deref().unwrap_or("murders"))?;
    let ident = |s: usize, t: &str| {
        let _ = s;
        t.to_string()
    };
    let numeric = numeric_columns(&table, &ident);
    let mut cols: Vec<usize> = complete_columns(&table, &numeric)
        .into_iter()
        .filter(|&c| c != out_idx && !CRIME_COLUMNS.contains(&table.names[c].as_str()))
        .filter(|&c| !["state", "countyCode", "communityCode", "fold"].contains(&table.names[c].as_str()))
        .collect();
    let names = cols.iter().map(|&c| table.names[c].clone()).collect();
    cols.push(out_idx);
    let rows = numeric_rows(&table, &cols, ident)?;
    let loaded = assemble(rows, names, opts.threshold.unwrap_or(ThresholdRule::Fixed(0.5)), false)?;
    Ok(subsample(loaded, opts.max_records, tree))
}

/// Musk v2 (`clean2.data`, headerless): molecule and conformation names,
/// 166 features, then the class. Classes are balanced by down-sampling the
/// majority.
pub fn load_musk(path: &Path, opts: &LoaderOptions, tree: &SeedTree) -> Result<LoadedData> {
    let table = Table::read(path, false)?;
    let width = table.names.len();
    if width < 4 {
        return Err(Error::Schema(format!("expected name columns, features and a class, got {width} columns")));
    }
    let cols: Vec<usize> = (2..width).collect();
    let rows = numeric_rows(&table, &cols, |_, s| s.to_string())?;
    let names = (1..width - 2).map(|j| format!("f{j}")).collect();
    let loaded = assemble(rows, names, opts.threshold.unwrap_or(ThresholdRule::Fixed(0.5)), false)?;
    let balanced = balance(loaded, tree);
    Ok(subsample(balanced, opts.max_records, tree))
}

/// Down-samples the majority class to the size of the minority class.
pub fn balance(loaded: LoadedData, tree: &SeedTree) -> LoadedData {
    let labels = loaded.data.labels();
    let ones: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let zeros: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let (mut major, minor) = if ones.len() > zeros.len() { (ones, zeros) } else { (zeros, ones) };
    major.shuffle(&mut tree.named("balance").stream());
    major.truncate(minor.len());
    let mut idx: Vec<usize> = major.into_iter().chain(minor).collect();
    idx.sort_unstable();
    LoadedData {
        data: loaded.data.subset(&idx),
        columns: loaded.columns,
    }
}

/// Skewed, bimodal and flat marginals on `[0, 1]`, cycling, one per input.
pub fn standin_marginals(inputs: usize) -> Result<Vec<Marginal>> {
    (0..inputs).map(standin_marginal).collect()
}

fn standin_marginal(j: usize) -> Result<Marginal> {
    let g = 50;
    let edges: Vec<f64> = (0..=g).map(|k| k as f64 / g as f64).collect();
    let raw: Vec<f64> = (0..g)
        .map(|k| {
            let x = (k as f64 + 0.5) / g as f64;
            match j % 3 {
                0 => (-4.0 * x).exp(),
                1 => (-((x - 0.25) / 0.1).powi(2)).exp() + (-((x - 0.7) / 0.12).powi(2)).exp(),
                _ => 1.0,
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(Marginal::Empirical(Discretized::new(
        edges,
        raw.iter().map(|m| m / total).collect(),
    )?))
}

/// Synthetic stand-in for a real dataset: `inputs` columns with skewed
/// marginals and a label at the median of a latent output.
pub fn synthetic_standin(records: usize, inputs: usize, tree: &SeedTree) -> Result<LoadedData> {
    let mut rng = tree.named("standin").stream();
    let c = sample_corr_matrix(inputs + 1, &mut rng);
    let mut marginals = standin_marginals(inputs)?;
    marginals.push(Marginal::StandardNormal);
    let data = sample_copula(&c, &marginals, records, ThresholdRule::Median, &mut rng)?;
    Ok(LoadedData {
        data,
        columns: (1..=inputs).map(|j| format!("x{j}")).collect(),
    })
}

/// Loads `name` from `path` (ignored by the stand-in).
pub fn load_dataset(
    name: LoaderName,
    path: Option<&Path>,
    opts: &LoaderOptions,
    standin: (usize, usize),
    tree: &SeedTree,
) -> Result<LoadedData> {
    let need = || path.ok_or_else(|| Error::Config(format!("loader {name:?} needs a dataset path")));
    match name {
        LoaderName::Fifa19 => load_fifa19(need()?, opts, tree),
        LoaderName::Communities => load_communities(need()?, opts, tree),
        LoaderName::Musk => load_musk(need()?, opts, tree),
        LoaderName::Csv => Ok(subsample(load_csv(need()?, opts)?, opts.max_records, tree)),
        LoaderName::Synthetic => Ok(subsample(synthetic_standin(standin.0, standin.1, tree)?, opts.max_records, tree)),
    }
}
