//! Synthetic generators and CSV ingestion.

use std::path::Path;

use hcp_core::{Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest dataset accepted from any source.
pub const MIN_ROWS: usize = 10;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column {wanted:?} not found; available columns: {available}")]
    MissingColumn { wanted: String, available: String },
    #[error("row {row} has {found} cells, header has {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("row {row}, column {column:?}: {cell:?} is not a finite number")]
    NonNumeric { row: usize, column: String, cell: String },
    #[error("need at least {MIN_ROWS} rows, found {0}")]
    TooFewRows(usize),
    #[error("need at least one feature column besides the label")]
    NoFeatures,
    #[error(transparent)]
    Dataset(#[from] hcp_core::optim::OptimError),
}

/// Parameters of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum SyntheticConfig {
    /// Standard-normal design with `informative` nonzero coefficients drawn
    /// uniformly from `[-coef_scale, coef_scale]`, plus Gaussian noise.
    Linear {
        n: usize,
        p: usize,
        noise: f64,
        informative: usize,
        coef_scale: f64,
        seed: u64,
    },
    /// Uniform features on `[0, 1]` with the Friedman #1 response.
    Friedman1 { n: usize, p: usize, noise: f64, seed: u64 },
}

impl SyntheticConfig {
    pub fn linear(n: usize, p: usize, noise: f64, seed: u64) -> Self {
        SyntheticConfig::Linear {
            n,
            p,
            noise,
            informative: p.min(10),
            coef_scale: 1.0,
            seed,
        }
    }

    pub fn friedman1(n: usize, p: usize, seed: u64) -> Self {
        SyntheticConfig::Friedman1 { n, p, noise: 0.5, seed }
    }

    pub fn generate(&self) -> Result<Dataset, DataError> {
        match *self {
            SyntheticConfig::Linear {
                n,
                p,
                noise,
                informative,
                coef_scale,
                seed,
            } => gen_linear(n, p, noise, informative, coef_scale, seed),
            SyntheticConfig::Friedman1 { n, p, noise, seed } => gen_friedman1(n, p, noise, seed),
        }
    }
}

fn check_shape(n: usize, p: usize, noise: f64) -> Result<(), DataError> {
    if n < MIN_ROWS {
        return Err(DataError::InvalidParameter(format!("n must be at least {MIN_ROWS}, got {n}")));
    }
    if p == 0 {
        return Err(DataError::InvalidParameter("p must be positive".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(DataError::InvalidParameter(format!("noise must be finite and nonnegative, got {noise}")));
    }
    Ok(())
}

/// Linear model `y = Xβ* + σ·N(0, 1)`. The coefficients are drawn first, so
/// the design and noise streams do not depend on `informative`.
pub fn gen_linear(
    n: usize,
    p: usize,
    noise: f64,
    informative: usize,
    coef_scale: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    check_shape(n, p, noise)?;
    if informative > p {
        return Err(DataError::InvalidParameter(format!(
            "informative count {informative} exceeds p = {p}"
        )));
    }
    if !(coef_scale >= 0.0 && coef_scale.is_finite()) {
        return Err(DataError::InvalidParameter("coefficient scale must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<f64> = (0..p)
        .map(|j| {
            let c = coef_scale * (2.0 * rng.random::<f64>() - 1.0);
            if j < informative {
                c
            } else {
                0.0
            }
        })
        .collect();
    linear_with_coefficients(n, &coef, noise, &mut rng)
}

/// Linear data with explicit ground-truth coefficients.
pub fn gen_linear_with_coefficients(n: usize, coef: &[f64], noise: f64, seed: u64) -> Result<Dataset, DataError> {
    check_shape(n, coef.len(), noise)?;
    linear_with_coefficients(n, coef, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn linear_with_coefficients(n: usize, coef: &[f64], noise: f64, rng: &mut ChaCha8Rng) -> Result<Dataset, DataError> {
    let p = coef.len();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        let eps: f64 = StandardNormal.sample(rng);
        let signal: f64 = row.iter().zip(coef).map(|(a, b)| a * b).sum();
        y.push(signal + noise * eps);
        rows.push(row);
    }
    Ok(Dataset::new(Matrix::from_rows(&rows).map_err(hcp_core::optim::OptimError::from)?, y)?)
}

/// Deterministic part of the Friedman #1 response; only the first five
/// features enter.
pub fn friedman1_signal(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

pub fn gen_friedman1(n: usize, p: usize, noise: f64, seed: u64) -> Result<Dataset, DataError> {
    if p < 5 {
        return Err(DataError::InvalidParameter(format!("friedman1 needs p >= 5, got {p}")));
    }
    check_shape(n, p, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
        let eps: f64 = StandardNormal.sample(&mut rng);
        y.push(friedman1_signal(&row) + noise * eps);
        rows.push(row);
    }
    Ok(Dataset::new(Matrix::from_rows(&rows).map_err(hcp_core::optim::OptimError::from)?, y)?)
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

/// A dataset read from CSV, with the names of its feature columns.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub label_name: String,
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<CsvDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, label)
}

pub fn read_csv(reader: impl std::io::Read, label: &LabelColumn) -> Result<CsvDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = match label {
        LabelColumn::Name(name) => headers.iter().position(|h| h == name),
        LabelColumn::Index(i) => (*i < headers.len()).then_some(*i),
    }
    .ok_or_else(|| DataError::MissingColumn {
        wanted: match label {
            LabelColumn::Name(name) => name.clone(),
            LabelColumn::Index(i) => format!("#{i}"),
        },
        available: headers.join(", "),
    })?;
    if headers.len() < 2 {
        return Err(DataError::NoFeatures);
    }

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(DataError::Ragged {
                row,
                found: record.len(),
                expected: headers.len(),
            });
        }
        let mut features = Vec::with_capacity(headers.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            let value = cell
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::NonNumeric {
                    row,
                    column: headers[c].clone(),
                    cell: cell.to_string(),
                })?;
            if c == label_idx {
                y.push(value);
            } else {
                features.push(value);
            }
        }
        rows.push(features);
    }
    if rows.len() < MIN_ROWS {
        return Err(DataError::TooFewRows(rows.len()));
    }
    let x = Matrix::from_rows(&rows).map_err(hcp_core::optim::OptimError::from)?;
    let mut feature_names = headers.clone();
    let label_name = feature_names.remove(label_idx);
    Ok(CsvDataset {
        data: Dataset::new(x, y)?,
        feature_names,
        label_name,
    })
}

/// Writes features followed by the label column. Values use the shortest
/// decimal form that parses back to the same float.
pub fn write_csv(
    writer: impl std::io::Write,
    data: &Dataset,
    feature_names: Option<&[String]>,
    label_name: &str,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match feature_names {
        Some(names) if names.len() == data.p() => names.to_vec(),
        Some(_) => return Err(DataError::InvalidParameter("feature name count does not match p".into())),
        None => (1..=data.p()).map(|j| format!("x{j}")).collect(),
    };
    header.push(label_name.to_string());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut record: Vec<String> = data.x().row(i).iter().map(|v| v.to_string()).collect();
        record.push(data.y()[i].to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}
