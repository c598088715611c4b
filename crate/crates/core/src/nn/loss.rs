use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// Lower clip bound applied to predictions before taking the log in CCE.
pub const CCE_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "MSE")]
    Mse,
    #[serde(rename = "CCE")]
    Cce,
}

impl LossKind {
    pub const ALL: [LossKind; 2] = [LossKind::Mse, LossKind::Cce];

    pub fn loss(self, target: &Tensor, prediction: &Tensor) -> Result<f64> {
        match self {
            LossKind::Mse => mse_loss(target, prediction),
            LossKind::Cce => cce_loss(target, prediction),
        }
    }

    /// Derivative of the loss with respect to each prediction.
    pub fn gradient(self, target: &Tensor, prediction: &Tensor) -> Result<Tensor> {
        check_shapes(target, prediction)?;
        let mut grad = prediction.clone();
        match self {
            LossKind::Mse => {
                let scale = 2.0 / target.rows() as f64;
                for (g, &y) in grad.data_mut().iter_mut().zip(target.data()) {
                    *g = scale * (*g - y);
                }
            }
            LossKind::Cce => {
                for (g, &y) in grad.data_mut().iter_mut().zip(target.data()) {
                    let p = *g;
                    // clip passes the gradient only inside its bounds
                    *g = if (CCE_EPSILON..=1.0).contains(&p) { -y / p } else { 0.0 };
                }
            }
        }
        Ok(grad)
    }
}

/// Squared error summed over output components and averaged over samples
/// (the leading axis).
pub fn mse_loss(target: &Tensor, prediction: &Tensor) -> Result<f64> {
    check_shapes(target, prediction)?;
    let sum: f64 = target
        .data()
        .iter()
        .zip(prediction.data())
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    Ok(sum / target.rows() as f64)
}

/// Categorical cross entropy summed over samples, with predictions clipped
/// to `[CCE_EPSILON, 1]`.
pub fn cce_loss(target: &Tensor, prediction: &Tensor) -> Result<f64> {
    check_shapes(target, prediction)?;
    Ok(-target
        .data()
        .iter()
        .zip(prediction.data())
        .filter(|(y, _)| **y != 0.0)
        .map(|(y, p)| y * p.clamp(CCE_EPSILON, 1.0).ln())
        .sum::<f64>())
}

fn check_shapes(target: &Tensor, prediction: &Tensor) -> Result<()> {
    if target.shape() != prediction.shape() {
        return Err(Error::Shape(format!(
            "target shape {:?} does not match prediction shape {:?}",
            target.shape(),
            prediction.shape()
        )));
    }
    Ok(())
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "MSE",
            LossKind::Cce => "CCE",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MSE" => Ok(LossKind::Mse),
            "CCE" => Ok(LossKind::Cce),
            other => Err(format!("unknown loss '{other}'")),
        }
    }
}
