//! Layer kernels: forward passes that record what backward needs, and the
//! matching backward passes.
//!
//! Spatial tensors are `[samples, height, width, channels]`. Convolution and
//! max-pooling use square windows with stride 1 and no padding.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::linalg::{matmul, matmul_nt, matmul_tn};
use super::{Activation, Tensor};
use crate::error::{Error, Result};
use crate::Rng;

/// Shape-level description of one layer, produced when a chromosome is
/// compiled and consumed when weights are allocated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    Convolution {
        height: usize,
        width: usize,
        channels: usize,
        filters: usize,
        kernel: usize,
    },
    MaxPooling {
        height: usize,
        width: usize,
        channels: usize,
        window: usize,
    },
    Dropout {
        keep_prob: f64,
    },
    Flatten {
        features: usize,
    },
    FullyConnected {
        inputs: usize,
        units: usize,
    },
    OutputDense {
        inputs: usize,
        units: usize,
        activation: Activation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Convolution,
    MaxPooling,
    Dropout,
    Flatten,
    FullyConnected,
    OutputDense,
}

impl LayerSpec {
    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Convolution { .. } => LayerKind::Convolution,
            LayerSpec::MaxPooling { .. } => LayerKind::MaxPooling,
            LayerSpec::Dropout { .. } => LayerKind::Dropout,
            LayerSpec::Flatten { .. } => LayerKind::Flatten,
            LayerSpec::FullyConnected { .. } => LayerKind::FullyConnected,
            LayerSpec::OutputDense { .. } => LayerKind::OutputDense,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Convolution {
                channels,
                filters,
                kernel,
                ..
            } => kernel * kernel * channels * filters + filters,
            LayerSpec::FullyConnected { inputs, units }
            | LayerSpec::OutputDense { inputs, units, .. } => inputs * units + units,
            _ => 0,
        }
    }
}

/// Gaussian weight initialisation; biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightInit {
    pub mean: f64,
    pub std: f64,
}

impl Default for WeightInit {
    fn default() -> Self {
        Self {
            mean: 0.0,
            std: 0.01,
        }
    }
}

/// Draws a weight tensor of `shape` from `N(init.mean, init.std²)`.
pub fn init_weights(shape: &[usize], init: WeightInit, rng: &mut Rng) -> Tensor {
    let normal = Normal::new(init.mean, init.std).expect("std must be finite and non-negative");
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = normal.sample(rng);
    }
    t
}

pub fn init_bias(shape: &[usize]) -> Tensor {
    Tensor::zeros(shape)
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv2d {
        /// `[kernel, kernel, in_channels, filters]`
        weights: Tensor,
        bias: Tensor,
        kernel: usize,
    },
    MaxPool2d {
        window: usize,
    },
    Dropout {
        keep_prob: f64,
    },
    Flatten,
    Dense {
        /// `[inputs, units]`
        weights: Tensor,
        bias: Tensor,
        activation: Activation,
        output: bool,
    },
}

#[derive(Debug)]
pub(crate) enum Cache {
    Conv {
        input_shape: Vec<usize>,
        cols: Vec<f64>,
        out: Tensor,
    },
    Pool {
        input_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Dropout {
        mask: Option<Vec<f64>>,
    },
    Flatten {
        input_shape: Vec<usize>,
    },
    Dense {
        input: Tensor,
        out: Tensor,
    },
}

impl Layer {
    pub fn from_spec(spec: &LayerSpec, init: WeightInit, rng: &mut Rng) -> Self {
        match *spec {
            LayerSpec::Convolution {
                channels,
                filters,
                kernel,
                ..
            } => Layer::Conv2d {
                weights: init_weights(&[kernel, kernel, channels, filters], init, rng),
                bias: init_bias(&[filters]),
                kernel,
            },
            LayerSpec::MaxPooling { window, .. } => Layer::MaxPool2d { window },
            LayerSpec::Dropout { keep_prob } => Layer::Dropout { keep_prob },
            LayerSpec::Flatten { .. } => Layer::Flatten,
            LayerSpec::FullyConnected { inputs, units } => Layer::Dense {
                weights: init_weights(&[inputs, units], init, rng),
                bias: init_bias(&[units]),
                activation: Activation::Relu,
                output: false,
            },
            LayerSpec::OutputDense {
                inputs,
                units,
                activation,
            } => Layer::Dense {
                weights: init_weights(&[inputs, units], init, rng),
                bias: init_bias(&[units]),
                activation,
                output: true,
            },
        }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv2d { .. } => LayerKind::Convolution,
            Layer::MaxPool2d { .. } => LayerKind::MaxPooling,
            Layer::Dropout { .. } => LayerKind::Dropout,
            Layer::Flatten => LayerKind::Flatten,
            Layer::Dense { output: false, .. } => LayerKind::FullyConnected,
            Layer::Dense { output: true, .. } => LayerKind::OutputDense,
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv2d { weights, bias, .. } | Layer::Dense { weights, bias, .. } => {
                vec![weights, bias]
            }
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv2d { weights, bias, .. } | Layer::Dense { weights, bias, .. } => {
                vec![weights, bias]
            }
            _ => Vec::new(),
        }
    }

    /// `dropout_rng` is `Some` only in training mode.
    pub(crate) fn forward(
        &self,
        x: &Tensor,
        dropout_rng: Option<&mut Rng>,
    ) -> Result<(Tensor, Cache)> {
        match self {
            Layer::Conv2d {
                weights,
                bias,
                kernel,
            } => conv_forward(x, weights, bias, *kernel),
            Layer::MaxPool2d { window } => pool_forward(x, *window),
            Layer::Dropout { keep_prob } => Ok(dropout_forward(x, *keep_prob, dropout_rng)),
            Layer::Flatten => {
                let n = x.rows();
                let out = x.clone().reshape(vec![n, x.row_len()])?;
                Ok((
                    out,
                    Cache::Flatten {
                        input_shape: x.shape().to_vec(),
                    },
                ))
            }
            Layer::Dense {
                weights,
                bias,
                activation,
                ..
            } => dense_forward(x, weights, bias, *activation),
        }
    }

    /// Returns the gradient with respect to the layer input and the gradients
    /// of this layer's parameters in [`Layer::params`] order.
    pub(crate) fn backward(&self, cache: &Cache, grad: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        match (self, cache) {
            (
                Layer::Conv2d {
                    weights, kernel, ..
                },
                Cache::Conv {
                    input_shape,
                    cols,
                    out,
                },
            ) => conv_backward(weights, *kernel, input_shape, cols, out, grad),
            (Layer::MaxPool2d { .. }, Cache::Pool { input_shape, argmax }) => {
                let mut dx = Tensor::zeros(input_shape);
                let d = dx.data_mut();
                for (&i, &g) in argmax.iter().zip(grad.data()) {
                    d[i] += g;
                }
                Ok((dx, Vec::new()))
            }
            (Layer::Dropout { .. }, Cache::Dropout { mask }) => {
                let dx = match mask {
                    Some(mask) => {
                        let mut dx = grad.clone();
                        for (g, m) in dx.data_mut().iter_mut().zip(mask) {
                            *g *= m;
                        }
                        dx
                    }
                    None => grad.clone(),
                };
                Ok((dx, Vec::new()))
            }
            (Layer::Flatten, Cache::Flatten { input_shape }) => {
                Ok((grad.clone().reshape(input_shape.clone())?, Vec::new()))
            }
            (
                Layer::Dense {
                    weights,
                    activation,
                    ..
                },
                Cache::Dense { input, out },
            ) => dense_backward(weights, *activation, input, out, grad),
            _ => Err(Error::Shape("layer cache does not match layer".into())),
        }
    }
}

fn spatial_dims(x: &Tensor, what: &str) -> Result<(usize, usize, usize, usize)> {
    match *x.shape() {
        [n, h, w, c] => Ok((n, h, w, c)),
        _ => Err(Error::Shape(format!(
            "{what} expects [samples, height, width, channels], got {:?}",
            x.shape()
        ))),
    }
}

fn im2col(x: &[f64], (n, h, w, c): (usize, usize, usize, usize), k: usize) -> Vec<f64> {
    let (ho, wo) = (h + 1 - k, w + 1 - k);
    let mut cols = Vec::with_capacity(n * ho * wo * k * k * c);
    for s in 0..n {
        for i in 0..ho {
            for j in 0..wo {
                for di in 0..k {
                    let start = ((s * h + i + di) * w + j) * c;
                    cols.extend_from_slice(&x[start..start + k * c]);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], (n, h, w, c): (usize, usize, usize, usize), k: usize) -> Vec<f64> {
    let (ho, wo) = (h + 1 - k, w + 1 - k);
    let mut x = vec![0.0; n * h * w * c];
    let mut rows = cols.chunks_exact(k * k * c);
    for s in 0..n {
        for i in 0..ho {
            for j in 0..wo {
                let row = rows.next().expect("column buffer matches geometry");
                for di in 0..k {
                    let start = ((s * h + i + di) * w + j) * c;
                    for (dst, src) in x[start..start + k * c]
                        .iter_mut()
                        .zip(&row[di * k * c..(di + 1) * k * c])
                    {
                        *dst += src;
                    }
                }
            }
        }
    }
    x
}

fn conv_forward(x: &Tensor, weights: &Tensor, bias: &Tensor, k: usize) -> Result<(Tensor, Cache)> {
    let (n, h, w, c) = spatial_dims(x, "convolution")?;
    let filters = bias.len();
    if h < k || w < k || weights.len() != k * k * c * filters {
        return Err(Error::Shape(format!(
            "convolution with {k}x{k} kernel cannot take input {:?}",
            x.shape()
        )));
    }
    let (ho, wo) = (h + 1 - k, w + 1 - k);
    let cols = im2col(x.data(), (n, h, w, c), k);
    let rows = n * ho * wo;
    let mut z = matmul(&cols, weights.data(), rows, k * k * c, filters);
    for r in z.chunks_mut(filters) {
        for (v, b) in r.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    let out = Activation::Relu.apply(&Tensor::new(vec![n, ho, wo, filters], z)?);
    Ok((
        out.clone(),
        Cache::Conv {
            input_shape: x.shape().to_vec(),
            cols,
            out,
        },
    ))
}

fn conv_backward(
    weights: &Tensor,
    k: usize,
    input_shape: &[usize],
    cols: &[f64],
    out: &Tensor,
    grad: &Tensor,
) -> Result<(Tensor, Vec<Tensor>)> {
    let dz = Activation::Relu.backward(out, grad);
    let filters = *out.shape().last().expect("conv output is 4-d");
    let patch = weights.len() / filters;
    let rows = dz.len() / filters;
    let dw = matmul_tn(cols, dz.data(), patch, rows, filters);
    let mut db = vec![0.0; filters];
    for r in dz.data().chunks(filters) {
        for (acc, v) in db.iter_mut().zip(r) {
            *acc += v;
        }
    }
    let dcols = matmul_nt(dz.data(), weights.data(), rows, filters, patch);
    let dims = (
        input_shape[0],
        input_shape[1],
        input_shape[2],
        input_shape[3],
    );
    let dx = Tensor::new(input_shape.to_vec(), col2im(&dcols, dims, k))?;
    Ok((
        dx,
        vec![
            Tensor::new(weights.shape().to_vec(), dw)?,
            Tensor::new(vec![filters], db)?,
        ],
    ))
}

fn pool_forward(x: &Tensor, k: usize) -> Result<(Tensor, Cache)> {
    let (n, h, w, c) = spatial_dims(x, "max pooling")?;
    if h < k || w < k {
        return Err(Error::Shape(format!(
            "{k}x{k} max pooling cannot take input {:?}",
            x.shape()
        )));
    }
    let (ho, wo) = (h + 1 - k, w + 1 - k);
    let data = x.data();
    let mut out = vec![0.0; n * ho * wo * c];
    let mut argmax = vec![0usize; n * ho * wo * c];
    let cells = out.chunks_exact_mut(c).zip(argmax.chunks_exact_mut(c));
    for (cell, (best, best_idx)) in cells.enumerate() {
        let (s, i, j) = (cell / (ho * wo), cell / wo % ho, cell % wo);
        let origin = ((s * h + i) * w + j) * c;
        best.copy_from_slice(&data[origin..origin + c]);
        for (ch, b) in best_idx.iter_mut().enumerate() {
            *b = origin + ch;
        }
        for di in 0..k {
            for dj in 0..k {
                let start = ((s * h + i + di) * w + j + dj) * c;
                for (ch, &v) in data[start..start + c].iter().enumerate() {
                    if v > best[ch] {
                        best[ch] = v;
                        best_idx[ch] = start + ch;
                    }
                }
            }
        }
    }
    Ok((
        Tensor::new(vec![n, ho, wo, c], out)?,
        Cache::Pool {
            input_shape: x.shape().to_vec(),
            argmax,
        },
    ))
}

fn dropout_forward(x: &Tensor, keep_prob: f64, rng: Option<&mut Rng>) -> (Tensor, Cache) {
    match rng {
        None => (x.clone(), Cache::Dropout { mask: None }),
        Some(rng) => {
            let scale = 1.0 / keep_prob;
            let mask: Vec<f64> = (0..x.len())
                .map(|_| {
                    if rng.random::<f64>() < keep_prob {
                        scale
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut out = x.clone();
            for (v, m) in out.data_mut().iter_mut().zip(&mask) {
                *v *= m;
            }
            (out, Cache::Dropout { mask: Some(mask) })
        }
    }
}

fn dense_forward(
    x: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    activation: Activation,
) -> Result<(Tensor, Cache)> {
    let (inputs, units) = (weights.shape()[0], weights.shape()[1]);
    if x.shape().len() != 2 || x.row_len() != inputs {
        return Err(Error::Shape(format!(
            "dense layer expects [samples, {inputs}], got {:?}",
            x.shape()
        )));
    }
    let n = x.rows();
    let mut z = matmul(x.data(), weights.data(), n, inputs, units);
    for r in z.chunks_mut(units) {
        for (v, b) in r.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    let out = activation.apply(&Tensor::new(vec![n, units], z)?);
    Ok((
        out.clone(),
        Cache::Dense {
            input: x.clone(),
            out,
        },
    ))
}

fn dense_backward(
    weights: &Tensor,
    activation: Activation,
    input: &Tensor,
    out: &Tensor,
    grad: &Tensor,
) -> Result<(Tensor, Vec<Tensor>)> {
    let (inputs, units) = (weights.shape()[0], weights.shape()[1]);
    let n = input.rows();
    let dz = activation.backward(out, grad);
    let dw = matmul_tn(input.data(), dz.data(), inputs, n, units);
    let mut db = vec![0.0; units];
    for r in dz.data().chunks(units) {
        for (acc, v) in db.iter_mut().zip(r) {
            *acc += v;
        }
    }
    let dx = matmul_nt(dz.data(), weights.data(), n, units, inputs);
    Ok((
        Tensor::new(vec![n, inputs], dx)?,
        vec![
            Tensor::new(vec![inputs, units], dw)?,
            Tensor::new(vec![units], db)?,
        ],
    ))
}
