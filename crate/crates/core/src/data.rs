//! Dataset ingestion and preprocessing.
//!
//! A CSV table is split into features and a target column, shuffled, cut into
//! equal train/validation halves (at most 1000 samples each), and standardised
//! with training-set statistics. Targets are kept both raw and one-hot
//! encoded; the one-hot map is built over every sample so its width `U` is the
//! number of distinct target values in the whole table.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::seed;

/// Maximum number of samples in each of the train and validation sets.
pub const SPLIT_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn size(&self) -> usize {
        self.height * self.width * self.channels
    }
}

impl FromStr for ImageShape {
    type Err = String;

    /// Parses `H,W,C`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dims: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad image shape '{s}': {e}"))?;
        match dims[..] {
            [height, width, channels] if height > 0 && width > 0 && channels > 0 => Ok(Self {
                height,
                width,
                channels,
            }),
            _ => Err(format!("image shape must be three positive integers H,W,C, got '{s}'")),
        }
    }
}

impl fmt::Display for ImageShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.height, self.width, self.channels)
    }
}

/// Per-sample input geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputShape {
    Flat { features: usize },
    Image { height: usize, width: usize, channels: usize },
}

impl InputShape {
    pub fn from_features(features: usize, image: Option<ImageShape>) -> Self {
        match image {
            Some(s) => InputShape::Image {
                height: s.height,
                width: s.width,
                channels: s.channels,
            },
            None => InputShape::Flat { features },
        }
    }

    /// Tensor dimensions of one sample.
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            InputShape::Flat { features } => vec![features],
            InputShape::Image {
                height,
                width,
                channels,
            } => vec![height, width, channels],
        }
    }

    pub fn is_image(&self) -> bool {
        matches!(self, InputShape::Image { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            InputShape::Flat { .. } => "flat",
            InputShape::Image { .. } => "image",
        }
    }
}

/// Parsed CSV contents before any preprocessing.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// Row-major `samples × features`.
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    pub image_shape: Option<ImageShape>,
}

impl RawTable {
    pub fn new(
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
        image_shape: Option<ImageShape>,
    ) -> Result<Self> {
        let width = features.first().map(Vec::len).unwrap_or(0);
        if features.iter().any(|r| r.len() != width) {
            return Err(Error::Data("rows have different feature counts".into()));
        }
        let table = Self {
            feature_names: (0..width).map(|i| format!("x{i}")).collect(),
            target_name: "y".into(),
            features: features.concat(),
            targets,
            image_shape,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn input_shape(&self) -> InputShape {
        InputShape::from_features(self.n_features(), self.image_shape)
    }

    fn validate(&self) -> Result<()> {
        let n = self.samples();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 samples, got {n}")));
        }
        if self.n_features() == 0 {
            return Err(Error::Data("no feature columns".into()));
        }
        if self.features.len() != n * self.n_features() {
            return Err(Error::Data("feature matrix does not match sample count".into()));
        }
        if let Some(shape) = self.image_shape {
            if shape.size() != self.n_features() {
                return Err(Error::Data(format!(
                    "image shape {shape} holds {} values but there are {} feature columns",
                    shape.size(),
                    self.n_features()
                )));
            }
        }
        if self.features.iter().chain(&self.targets).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in table".into()));
        }
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "?" || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("n/a") || c.eq_ignore_ascii_case("nan")
}

/// Loads a headed CSV. `target` names the label column; if no header matches
/// and it parses as an integer, it is taken as a zero-based column index.
pub fn load_csv(path: &Path, target: &str, image_shape: Option<ImageShape>) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, target, image_shape)
}

pub fn read_csv<R: Read>(reader: R, target: &str, image_shape: Option<ImageShape>) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target)
        .or_else(|| target.parse::<usize>().ok().filter(|&i| i < headers.len()))
        .ok_or_else(|| Error::TargetColumn(target.to_string()))?;

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row + 1;
        for (col, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                return Err(Error::MissingValue {
                    row,
                    column: headers[col].clone(),
                });
            }
            let value: f64 = cell
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: headers[col].clone(),
                    value: cell.to_string(),
                })?;
            if col == target_idx {
                targets.push(value);
            } else {
                features.push(value);
            }
        }
    }

    let table = RawTable {
        feature_names: headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target_idx)
            .map(|(_, h)| h.clone())
            .collect(),
        target_name: headers[target_idx].clone(),
        features,
        targets,
        image_shape,
    };
    table.validate()?;
    Ok(table)
}

/// Sorted distinct target values; position in the list is the one-hot index.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetIndex {
    values: Vec<f64>,
}

impl TargetIndex {
    /// Values are compared exactly (with `-0.0 == 0.0`).
    pub fn new(targets: &[f64]) -> Self {
        let mut values: Vec<f64> = targets
            .iter()
            .map(|&v| if v == 0.0 { 0.0 } else { v })
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index_of(&self, v: f64) -> Option<usize> {
        let v = if v == 0.0 { 0.0 } else { v };
        self.values.binary_search_by(|p| p.total_cmp(&v)).ok()
    }
}

/// Number of distinct target values, `U`.
pub fn unique_targets(targets: &[f64]) -> usize {
    TargetIndex::new(targets).len()
}

/// `[targets.len(), index.len()]` matrix with a single 1 per row.
pub fn one_hot(targets: &[f64], index: &TargetIndex) -> Result<Tensor> {
    let width = index.len();
    let mut data = vec![0.0; targets.len() * width];
    for (row, &t) in targets.iter().enumerate() {
        let col = index.index_of(t).ok_or(Error::UnseenTarget(t))?;
        data[row * width + col] = 1.0;
    }
    Tensor::new(vec![targets.len(), width], data)
}

/// Per-feature `(x - mean) / std` with statistics taken from `train` only.
/// Features with zero spread map to 0. Both inputs are `[samples, features]`.
pub fn standardize(train: &Tensor, val: &Tensor) -> Result<(Tensor, Tensor)> {
    let f = train.row_len();
    if val.row_len() != f {
        return Err(Error::Shape("train and validation feature counts differ".into()));
    }
    let n = train.rows() as f64;
    let mut mean = vec![0.0; f];
    for r in train.data().chunks(f) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = vec![0.0; f];
    for r in train.data().chunks(f) {
        for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / n).sqrt());

    let apply = |t: &Tensor| {
        let mut out = t.clone();
        for r in out.data_mut().chunks_mut(f) {
            for ((v, m), s) in r.iter_mut().zip(&mean).zip(&std) {
                *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        out
    };
    Ok((apply(train), apply(val)))
}

/// A preprocessed dataset, immutable once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub input: InputShape,
    pub x_train: Tensor,
    pub x_val: Tensor,
    /// Raw targets, `[samples, 1]`.
    pub y_train: Tensor,
    pub y_val: Tensor,
    pub y_train_onehot: Tensor,
    pub y_val_onehot: Tensor,
    pub targets: TargetIndex,
    /// Rows of the source table in each split.
    pub train_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
    pub total_samples: usize,
}

impl Dataset {
    /// `U`, counted over every sample of the source table.
    pub fn unique_targets(&self) -> usize {
        self.targets.len()
    }

    /// Raw targets repeated across `units` columns, for MSE networks.
    pub fn raw_targets(&self, units: usize) -> Result<(Tensor, Tensor)> {
        Ok((widen(&self.y_train, units)?, widen(&self.y_val, units)?))
    }
}

fn widen(column: &Tensor, units: usize) -> Result<Tensor> {
    if units == 1 {
        return Ok(column.clone());
    }
    let data = column
        .data()
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, units))
        .collect();
    Tensor::new(vec![column.rows(), units], data)
}

/// Split sizes for `n` samples: 1000/1000 when there are enough, otherwise
/// two halves with any odd sample going to training.
pub fn split_sizes(n: usize) -> (usize, usize) {
    if n >= 2 * SPLIT_CAP {
        (SPLIT_CAP, SPLIT_CAP)
    } else {
        (n.div_ceil(2), n / 2)
    }
}

/// Shuffles, splits, standardises and encodes `raw`.
pub fn split(raw: &RawTable, seed: u64) -> Result<Dataset> {
    raw.validate()?;
    let n = raw.samples();
    let f = raw.n_features();
    let targets = TargetIndex::new(&raw.targets);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, &[seed::SPLIT_STREAM])));
    let (n_train, n_val) = split_sizes(n);
    let train_rows = order[..n_train].to_vec();
    let val_rows = order[n_train..n_train + n_val].to_vec();

    let all = Tensor::new(vec![n, f], raw.features.clone())?;
    let (x_train, x_val) = standardize(&all.select_rows(&train_rows)?, &all.select_rows(&val_rows)?)?;
    let input = raw.input_shape();
    let reshape = |t: Tensor, rows: usize| {
        let mut shape = vec![rows];
        shape.extend(input.dims());
        t.reshape(shape)
    };

    let pick = |rows: &[usize]| rows.iter().map(|&r| raw.targets[r]).collect::<Vec<_>>();
    let (t_train, t_val) = (pick(&train_rows), pick(&val_rows));

    Ok(Dataset {
        input,
        x_train: reshape(x_train, n_train)?,
        x_val: reshape(x_val, n_val)?,
        y_train: Tensor::column(&t_train)?,
        y_val: Tensor::column(&t_val)?,
        y_train_onehot: one_hot(&t_train, &targets)?,
        y_val_onehot: one_hot(&t_val, &targets)?,
        targets,
        train_rows,
        val_rows,
        total_samples: n,
    })
}
