//! Automated problem identification.
//!
//! Given a supervised dataset, `probident` evolves a population of small deep
//! network specifications with a generational genetic algorithm. Each
//! chromosome carries four genes: a loss (MSE or CCE), the output unit count
//! (1 or the number of distinct targets), the output activation, and a list
//! of hidden layer codes. Networks are trained briefly; those whose validation
//! loss does not drop are penalised, the rest score their validation MSE. The
//! loss gene of the best chromosome labels the dataset: CCE means
//! classification, MSE means regression.
//!
//! Module map:
//! - [`nn`]: tensors, layers, losses, backprop, Adam, the training loop
//! - [`data`]: CSV ingestion, splitting, standardisation, one-hot targets
//! - [`genome`]: chromosomes and their compilation into networks
//! - [`evolution`]: tournament selection, crossover, mutation, the GA loop
//! - [`fitness`]: chromosome evaluation and the final verdict
//! - [`report`], [`synth`], [`cli`]: the command-line driver

pub mod cli;
pub mod data;
pub mod error;
pub mod evolution;
pub mod fitness;
pub mod genome;
pub mod nn;
pub mod params;
pub mod report;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};

/// The deterministic generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;
