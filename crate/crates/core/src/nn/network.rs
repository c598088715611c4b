use super::layer::{Layer, LayerKind, LayerSpec, WeightInit};
use super::{Activation, LossKind, Tensor};
use crate::error::{Error, Result};
use crate::Rng;

/// Whether dropout is active for a forward pass.
pub enum Mode<'a> {
    Inference,
    Training(&'a mut Rng),
}

/// A feed-forward stack ending in exactly one output-dense layer.
#[derive(Debug, Clone)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    loss: LossKind,
}

impl Network {
    /// Allocates weights for a compiled layer plan. `input_shape` excludes the
    /// sample axis.
    pub fn from_specs(
        input_shape: &[usize],
        specs: &[LayerSpec],
        loss: LossKind,
        init: WeightInit,
        rng: &mut Rng,
    ) -> Result<Self> {
        let outputs = specs
            .iter()
            .filter(|s| s.kind() == LayerKind::OutputDense)
            .count();
        if outputs != 1 || specs.last().map(LayerSpec::kind) != Some(LayerKind::OutputDense) {
            return Err(Error::Shape(
                "network needs exactly one output layer, in last position".into(),
            ));
        }
        let layers = specs
            .iter()
            .map(|s| Layer::from_spec(s, init, rng))
            .collect();
        Ok(Self {
            input_shape: input_shape.to_vec(),
            layers,
            loss,
        })
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_kinds(&self) -> Vec<LayerKind> {
        self.layers.iter().map(Layer::kind).collect()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_units(&self) -> usize {
        match self.layers.last() {
            Some(Layer::Dense { bias, .. }) => bias.len(),
            _ => unreachable!("constructor guarantees a dense output layer"),
        }
    }

    pub fn output_activation(&self) -> Activation {
        match self.layers.last() {
            Some(Layer::Dense { activation, .. }) => *activation,
            _ => unreachable!("constructor guarantees a dense output layer"),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() != self.input_shape.len() + 1 || x.shape()[1..] != self.input_shape[..] {
            return Err(Error::Shape(format!(
                "network expects samples of shape {:?}, got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor, mode: Mode<'_>) -> Result<Tensor> {
        self.check_input(x)?;
        let mut rng = match mode {
            Mode::Inference => None,
            Mode::Training(rng) => Some(rng),
        };
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward(&h, rng.as_deref_mut())?.0;
        }
        Ok(h)
    }

    /// Inference-mode forward pass.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        self.forward(x, Mode::Inference)
    }

    /// Loss on `(x, y)` under the network's own loss kind, without dropout.
    pub fn evaluate_loss(&self, x: &Tensor, y: &Tensor) -> Result<f64> {
        self.loss.loss(y, &self.predict(x)?)
    }

    /// Runs a forward pass and backpropagates the loss. Gradients come back in
    /// [`Network::params`] order. Dropout is active iff `dropout_rng` is given.
    pub fn loss_and_gradients(
        &self,
        x: &Tensor,
        y: &Tensor,
        mut dropout_rng: Option<&mut Rng>,
    ) -> Result<(f64, Vec<Tensor>)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&h, dropout_rng.as_deref_mut())?;
            caches.push(cache);
            h = out;
        }
        let loss = self.loss.loss(y, &h)?;
        let mut grad = self.loss.gradient(y, &h)?;

        let mut per_layer: Vec<Vec<Tensor>> = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&caches).rev() {
            let (dx, dparams) = layer.backward(cache, &grad)?;
            per_layer.push(dparams);
            grad = dx;
        }
        per_layer.reverse();
        Ok((loss, per_layer.into_iter().flatten().collect()))
    }
}
