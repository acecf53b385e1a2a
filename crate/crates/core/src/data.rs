//! Training data: CSV ingestion, normalization and train/test splitting.
//!
//! Inputs are rescaled to `[0, 1]` per column and outputs are standardized to
//! zero mean and unit variance. Both transforms are fitted on the training split
//! only and recorded so that predictions can be mapped back to original units.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column affine maps `normalized = (raw - shift) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_shift: Vec<f64>,
    pub output_scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(d: usize, m: usize) -> Self {
        Self {
            input_shift: vec![0.0; d],
            input_scale: vec![1.0; d],
            output_shift: vec![0.0; m],
            output_scale: vec![1.0; m],
        }
    }

    /// Min-max for inputs, mean / population standard deviation for outputs.
    pub fn fit(
        inputs: &Matrix,
        outputs: &Matrix,
        input_names: &[String],
        output_names: &[String],
    ) -> Result<Self> {
        let mut input_shift = Vec::with_capacity(inputs.cols());
        let mut input_scale = Vec::with_capacity(inputs.cols());
        for j in 0..inputs.cols() {
            let col = inputs.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scale = hi - lo;
            if !(scale > 0.0) {
                return Err(Error::DegenerateColumn(input_names[j].clone()));
            }
            input_shift.push(lo);
            input_scale.push(scale);
        }
        let mut output_shift = Vec::with_capacity(outputs.cols());
        let mut output_scale = Vec::with_capacity(outputs.cols());
        for k in 0..outputs.cols() {
            let col = outputs.column(k);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::DegenerateColumn(output_names[k].clone()));
            }
            output_shift.push(mean);
            output_scale.push(sd);
        }
        Ok(Self {
            input_shift,
            input_scale,
            output_shift,
            output_scale,
        })
    }

    pub fn normalize_inputs(&self, raw: &Matrix) -> Result<Matrix> {
        affine(raw, &self.input_shift, &self.input_scale, false)
    }

    pub fn denormalize_inputs(&self, normalized: &Matrix) -> Result<Matrix> {
        affine(normalized, &self.input_shift, &self.input_scale, true)
    }

    pub fn standardize_outputs(&self, raw: &Matrix) -> Result<Matrix> {
        affine(raw, &self.output_shift, &self.output_scale, false)
    }

    pub fn destandardize_outputs(&self, standardized: &Matrix) -> Result<Matrix> {
        affine(standardized, &self.output_shift, &self.output_scale, true)
    }

    /// Maps a variance in standardized units back to squared original units.
    pub fn destandardize_variance(&self, k: usize, variance: f64) -> f64 {
        variance * self.output_scale[k] * self.output_scale[k]
    }
}

fn affine(m: &Matrix, shift: &[f64], scale: &[f64], inverse: bool) -> Result<Matrix> {
    if m.cols() != shift.len() {
        return Err(Error::Shape(format!(
            "matrix has {} columns, transform expects {}",
            m.cols(),
            shift.len()
        )));
    }
    let mut out = m.clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            let t = if inverse {
                v * scale[j] + shift[j]
            } else {
                (v - shift[j]) / scale[j]
            };
            out.set(i, j, t);
        }
    }
    Ok(out)
}

/// Inputs (`N x d`) and outputs (`N x m`) in normalized units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Matrix,
    outputs: Matrix,
    input_names: Vec<String>,
    output_names: Vec<String>,
    normalization: Normalization,
}

impl Dataset {
    /// Fits a fresh normalization to raw data and applies it.
    pub fn from_raw(
        inputs: Matrix,
        outputs: Matrix,
        input_names: Vec<String>,
        output_names: Vec<String>,
    ) -> Result<Self> {
        check_shapes(&inputs, &outputs, &input_names, &output_names)?;
        if inputs.rows() < 2 {
            return Err(Error::InsufficientData(inputs.rows()));
        }
        let normalization = Normalization::fit(&inputs, &outputs, &input_names, &output_names)?;
        Self::with_normalization(inputs, outputs, input_names, output_names, normalization)
    }

    /// Applies an existing normalization, e.g. the training transform to a test split.
    /// Any number of rows is accepted, including zero.
    pub fn with_normalization(
        inputs: Matrix,
        outputs: Matrix,
        input_names: Vec<String>,
        output_names: Vec<String>,
        normalization: Normalization,
    ) -> Result<Self> {
        check_shapes(&inputs, &outputs, &input_names, &output_names)?;
        Ok(Self {
            inputs: normalization.normalize_inputs(&inputs)?,
            outputs: normalization.standardize_outputs(&outputs)?,
            input_names,
            output_names,
            normalization,
        })
    }

    /// Wraps data that is already in model units (identity transform).
    pub fn normalized(inputs: Matrix, outputs: Matrix) -> Result<Self> {
        let input_names = default_names("x", inputs.cols());
        let output_names = default_names("y", outputs.cols());
        check_shapes(&inputs, &outputs, &input_names, &output_names)?;
        if inputs.rows() == 0 {
            return Err(Error::InsufficientData(0));
        }
        let normalization = Normalization::identity(inputs.cols(), outputs.cols());
        Ok(Self {
            inputs,
            outputs,
            input_names,
            output_names,
            normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.cols()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn outputs(&self) -> &Matrix {
        &self.outputs
    }

    pub fn output_column(&self, k: usize) -> Vec<f64> {
        self.outputs.column(k)
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// Outputs mapped back to original units.
    pub fn raw_outputs(&self) -> Matrix {
        self.normalization
            .destandardize_outputs(&self.outputs)
            .expect("shapes are validated at construction")
    }

    /// Inputs mapped back to original units.
    pub fn raw_inputs(&self) -> Matrix {
        self.normalization
            .denormalize_inputs(&self.inputs)
            .expect("shapes are validated at construction")
    }
}

pub(crate) fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_shapes(
    inputs: &Matrix,
    outputs: &Matrix,
    input_names: &[String],
    output_names: &[String],
) -> Result<()> {
    if inputs.rows() != outputs.rows() {
        return Err(Error::Shape(format!(
            "{} input rows but {} output rows",
            inputs.rows(),
            outputs.rows()
        )));
    }
    if inputs.cols() == 0 || outputs.cols() == 0 {
        return Err(Error::InvalidData(
            "need at least one input and one output column".into(),
        ));
    }
    if input_names.len() != inputs.cols() || output_names.len() != outputs.cols() {
        return Err(Error::Shape("column names do not match matrix widths".into()));
    }
    let finite = |m: &Matrix| m.as_slice().iter().all(|v| v.is_finite());
    if !finite(inputs) || !finite(outputs) {
        return Err(Error::InvalidData("non-finite entry".into()));
    }
    Ok(())
}

/// Reads a comma-separated file with a header row. Returns the header and the parsed rows.
pub fn read_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(header.len());
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::Parse {
                    // 1-based data row, header excluded
                    row: r + 1,
                    column: header.get(c).cloned().unwrap_or_default(),
                    value: cell.to_owned(),
                }
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Picks `columns` (by name) out of a parsed table, in the requested order.
pub fn select_columns(header: &[String], rows: &[Vec<f64>], columns: &[String]) -> Result<Matrix> {
    let idx = columns
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(rows.len() * idx.len());
    for row in rows {
        data.extend(idx.iter().map(|&j| row[j]));
    }
    Matrix::new(rows.len(), idx.len(), data)
}

/// Splits row indices `0..n` into sorted (train, test) sets. The test set has
/// `round(n * test_fraction)` rows drawn uniformly without replacement.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Loads a CSV, splits it and normalizes both halves with the training transform.
/// Every column not listed in `output_columns` is treated as an input.
pub fn load_dataset(
    path: impl AsRef<Path>,
    output_columns: &[String],
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (header, rows) = read_table(path)?;
    for name in output_columns {
        if !header.contains(name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }
    let input_names: Vec<String> = header
        .iter()
        .filter(|h| !output_columns.contains(h))
        .cloned()
        .collect();
    let inputs = select_columns(&header, &rows, &input_names)?;
    let outputs = select_columns(&header, &rows, output_columns)?;

    let (train_idx, test_idx) = split_indices(rows.len(), test_fraction, seed)?;
    if train_idx.len() < 2 {
        return Err(Error::InsufficientData(train_idx.len()));
    }
    let train = Dataset::from_raw(
        inputs.select_rows(&train_idx),
        outputs.select_rows(&train_idx),
        input_names.clone(),
        output_columns.to_vec(),
    )?;
    let test = Dataset::with_normalization(
        inputs.select_rows(&test_idx),
        outputs.select_rows(&test_idx),
        input_names,
        output_columns.to_vec(),
        train.normalization().clone(),
    )?;
    Ok((train, test))
}
