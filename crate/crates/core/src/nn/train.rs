use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{AdamState, Network, Tensor};
use crate::error::{Error, Result};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 2048,
            learning_rate: 0.001,
        }
    }
}

/// Validation losses `V_0..V_e`: `V_0` is measured before the first update
/// and `V_k` after epoch `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationTrace {
    pub losses: Vec<f64>,
    /// False when training hit a non-finite loss and stopped early.
    pub finite: bool,
}

/// A labelled split: inputs with their targets in the network's target space.
#[derive(Debug, Clone, Copy)]
pub struct Split<'a> {
    pub x: &'a Tensor,
    pub y: &'a Tensor,
}

/// Trains `network` in place with Adam under its own loss kind.
///
/// Batches hold `min(batch_size, n)` samples; with more than one batch per
/// epoch the sample order is reshuffled from `rng` every epoch. `rng` also
/// drives dropout.
pub fn train(
    network: &mut Network,
    train: Split<'_>,
    val: Split<'_>,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<ValidationTrace> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Param("epochs and batch size must be at least 1".into()));
    }
    if train.x.rows() != train.y.rows() || val.x.rows() != val.y.rows() {
        return Err(Error::Shape("inputs and targets differ in sample count".into()));
    }

    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    let v0 = network.evaluate_loss(val.x, val.y)?;
    losses.push(v0);
    if !v0.is_finite() {
        return Ok(ValidationTrace {
            losses,
            finite: false,
        });
    }

    let n = train.x.rows();
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = AdamState::new(&network.params(), cfg.learning_rate);

    for _ in 0..cfg.epochs {
        if batch < n {
            order.shuffle(rng);
        }
        for chunk in order.chunks(batch) {
            let (loss, grads) = if chunk.len() == n && batch == n {
                network.loss_and_gradients(train.x, train.y, Some(rng))?
            } else {
                let xb = train.x.select_rows(chunk)?;
                let yb = train.y.select_rows(chunk)?;
                network.loss_and_gradients(&xb, &yb, Some(rng))?
            };
            if !loss.is_finite() || grads.iter().any(|g| !g.all_finite()) {
                return Ok(ValidationTrace {
                    losses,
                    finite: false,
                });
            }
            adam.update(&mut network.params_mut(), &grads);
        }
        let v = network.evaluate_loss(val.x, val.y)?;
        losses.push(v);
        if !v.is_finite() {
            return Ok(ValidationTrace {
                losses,
                finite: false,
            });
        }
    }
    Ok(ValidationTrace {
        losses,
        finite: true,
    })
}
