//! Small synthetic datasets with a known problem type.
//!
//! - `blobs-K`: K Gaussian clusters in 4 dimensions, integer class labels.
//! - `linreg`: 8 standard-normal features, target linear in them plus noise,
//!   with target variance about 0.43 whatever the seed.
//! - `digits8x8`: 10 classes of 5x7 digit glyphs jittered inside an 8x8 image
//!   with intensity and pixel noise; load with `--image-shape 8,8,1`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::data::{ImageShape, RawTable};
use crate::error::{Error, Result};
use crate::seed;

const BLOB_DIMS: usize = 4;
const BLOB_SPREAD: f64 = 4.0;
const LINREG_DIMS: usize = 8;
/// Norm of the weight vector, so the target variance is the same for every seed.
const LINREG_SIGNAL: f64 = 0.65;
const LINREG_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Blobs(usize),
    Linreg,
    Digits8x8,
}

impl FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linreg" => Ok(SynthKind::Linreg),
            "digits8x8" => Ok(SynthKind::Digits8x8),
            _ => s
                .strip_prefix("blobs-")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 2)
                .map(SynthKind::Blobs)
                .ok_or_else(|| format!("unknown kind '{s}' (expected blobs-K with K >= 2, linreg or digits8x8)")),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthKind::Blobs(k) => write!(f, "blobs-{k}"),
            SynthKind::Linreg => f.write_str("linreg"),
            SynthKind::Digits8x8 => f.write_str("digits8x8"),
        }
    }
}

impl SynthKind {
    /// Image geometry for kinds that are images.
    pub fn image_shape(&self) -> Option<ImageShape> {
        match self {
            SynthKind::Digits8x8 => Some(ImageShape {
                height: 8,
                width: 8,
                channels: 1,
            }),
            _ => None,
        }
    }
}

/// Deterministically generates `n` samples.
pub fn generate(kind: SynthKind, n: usize, seed: u64) -> Result<RawTable> {
    if n < 2 {
        return Err(Error::Param("need at least 2 samples".into()));
    }
    let mut rng = seed::rng(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let (features, targets) = match kind {
        SynthKind::Blobs(k) => {
            let centres: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..BLOB_DIMS).map(|_| rng.random_range(-BLOB_SPREAD..BLOB_SPREAD)).collect())
                .collect();
            let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
            labels.shuffle(&mut rng);
            let features = labels
                .iter()
                .map(|&c| centres[c].iter().map(|m| m + unit.sample(&mut rng)).collect())
                .collect();
            (features, labels.iter().map(|&c| c as f64).collect())
        }
        SynthKind::Linreg => {
            let mut weights: Vec<f64> = (0..LINREG_DIMS).map(|_| unit.sample(&mut rng)).collect();
            let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            weights.iter_mut().for_each(|w| *w *= LINREG_SIGNAL / norm);
            let mut features = Vec::with_capacity(n);
            let mut targets = Vec::with_capacity(n);
            for _ in 0..n {
                let x: Vec<f64> = (0..LINREG_DIMS).map(|_| unit.sample(&mut rng)).collect();
                let y = x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()
                    + LINREG_NOISE * unit.sample(&mut rng);
                features.push(x);
                targets.push(y);
            }
            (features, targets)
        }
        SynthKind::Digits8x8 => {
            let noise = Normal::new(0.0, 0.15).expect("valid normal");
            let mut features = Vec::with_capacity(n);
            let mut targets = Vec::with_capacity(n);
            for i in 0..n {
                let digit = i % 10;
                let (dy, dx) = (rng.random_range(0..=1), rng.random_range(0..=3));
                let ink = rng.random_range(0.6..1.0);
                let mut img = vec![0.0; 64];
                for (r, row) in GLYPHS[digit].iter().enumerate() {
                    for c in 0..5 {
                        if row & (0b10000 >> c) != 0 {
                            img[(r + dy) * 8 + c + dx] = ink;
                        }
                    }
                }
                for p in img.iter_mut() {
                    *p += noise.sample(&mut rng);
                }
                features.push(img);
                targets.push(digit as f64);
            }
            (features, targets)
        }
    };
    RawTable::new(features, targets, kind.image_shape())
}

/// 5x7 glyphs for 0-9, one `u8` per row, high bit on the left.
const GLYPHS: [[u8; 7]; 10] = [
    [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
    [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
    [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
    [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
    [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
    [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
    [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
    [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
];

pub fn write_csv<W: Write>(table: &RawTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.feature_names.clone();
    header.push(table.target_name.clone());
    w.write_record(&header)?;
    let f = table.n_features();
    for (row, target) in table.features.chunks(f).zip(&table.targets) {
        w.write_record(row.iter().chain(std::iter::once(target)).map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::Data(format!("flush failed: {e}")))?;
    Ok(())
}

/// Generates a dataset and writes it as CSV with target column `y`.
pub fn gen_synth(kind: SynthKind, n: usize, seed: u64, out_path: &Path) -> Result<()> {
    let table = generate(kind, n, seed)?;
    let file = std::fs::File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    write_csv(&table, std::io::BufWriter::new(file))
}
