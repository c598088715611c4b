//! Run parameters. Defaults are the fixed values the method was designed with.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{TrainConfig, WeightInit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Probability that an offspring-production event is a crossover.
    pub crossover_rate: f64,
    /// Probability that an offspring-production event is a mutation.
    pub mutation_rate: f64,
    /// Draw convolution and pooling codes for flat inputs too. Off by default:
    /// those codes can never compile on flat data.
    pub spatial_codes_on_flat: bool,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 10,
            tournament_size: 5,
            crossover_rate: 0.70,
            mutation_rate: 0.30,
            spatial_codes_on_flat: false,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::Param("population size must be at least 1".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Param("tournament size must be at least 1".into()));
        }
        let rates = [self.crossover_rate, self.mutation_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Param("operator rates must lie in [0, 1]".into()));
        }
        if (self.crossover_rate + self.mutation_rate - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!(
                "crossover rate {} and mutation rate {} must sum to 1",
                self.crossover_rate, self.mutation_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub init: WeightInit,
    /// Units in every hidden fully-connected layer.
    pub hidden_units: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub pool_window: usize,
    pub keep_prob: f64,
}

impl Default for NnParams {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 2048,
            learning_rate: 0.001,
            init: WeightInit::default(),
            hidden_units: 100,
            conv_filters: 10,
            conv_kernel: 2,
            pool_window: 2,
            keep_prob: 0.8,
        }
    }
}

impl NnParams {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Param("epochs and batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Param("learning rate must be finite and non-negative".into()));
        }
        if !(self.init.std >= 0.0 && self.init.std.is_finite() && self.init.mean.is_finite()) {
            return Err(Error::Param("weight init must have finite mean and std >= 0".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Param("keep probability must lie in (0, 1]".into()));
        }
        if self.hidden_units == 0 || self.conv_filters == 0 || self.conv_kernel == 0 || self.pool_window == 0 {
            return Err(Error::Param("layer sizes must be at least 1".into()));
        }
        Ok(())
    }
}
