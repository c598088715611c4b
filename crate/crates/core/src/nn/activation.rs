use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Tensor;

/// Output-layer activations. Hidden layers always use [`Activation::Relu`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    /// Normalizes over the last axis of each sample.
    Softmax,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Linear,
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Softmax,
    ];

    pub fn apply(self, x: &Tensor) -> Tensor {
        match self {
            Activation::Linear => x.clone(),
            Activation::Relu => x.map(|v| v.max(0.0)),
            Activation::Sigmoid => x.map(sigmoid),
            Activation::Softmax => {
                let width = *x.shape().last().expect("tensor shape is non-empty");
                let mut out = x.clone();
                for row in out.data_mut().chunks_mut(width) {
                    softmax_in_place(row);
                }
                out
            }
        }
    }

    /// Gradient with respect to the pre-activation, given the activation's
    /// output `y` and the upstream gradient `grad`.
    pub fn backward(self, y: &Tensor, grad: &Tensor) -> Tensor {
        debug_assert_eq!(y.shape(), grad.shape());
        let mut out = grad.clone();
        match self {
            Activation::Linear => {}
            Activation::Relu => {
                for (g, &v) in out.data_mut().iter_mut().zip(y.data()) {
                    if v <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Sigmoid => {
                for (g, &v) in out.data_mut().iter_mut().zip(y.data()) {
                    *g *= v * (1.0 - v);
                }
            }
            Activation::Softmax => {
                let width = *y.shape().last().expect("tensor shape is non-empty");
                for (g_row, y_row) in out
                    .data_mut()
                    .chunks_mut(width)
                    .zip(y.data().chunks(width))
                {
                    let dot: f64 = g_row.iter().zip(y_row).map(|(g, y)| g * y).sum();
                    for (g, &y) in g_row.iter_mut().zip(y_row) {
                        *g = y * (*g - dot);
                    }
                }
            }
        }
        out
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        })
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "softmax" => Ok(Activation::Softmax),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}
