//! Chromosome evaluation and the final classification/regression verdict.
//!
//! A chromosome is compiled, trained for a few epochs with its own loss, and
//! judged by its validation trace `V_0..V_e`:
//!
//! ```text
//! delta_val = mean(V_1..V_e) - V_0
//! R         = delta_val / V_0
//! ```
//!
//! `R >= 0` means the network did not learn and the fitness is infinite.
//! Otherwise the fitness is the mean squared error between the network's
//! validation predictions and its validation targets (one-hot for CCE
//! chromosomes, raw for MSE chromosomes).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::evolution::{run_ga, Evaluator, GaRun};
use crate::genome::{build_network, Chromosome, InvalidReason, SearchSpace};
use crate::nn::{mse_loss, train, LossKind, Network, Split, Tensor};
use crate::params::{GaParams, NnParams};
use crate::seed;

/// Why a chromosome received infinite fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    Invalid(InvalidReason),
    /// `R >= 0`: validation loss did not drop.
    NotLearned,
    /// A loss or gradient became NaN or infinite.
    NonFinite,
    /// `V_0 = 0`, so `R` is undefined.
    ZeroInitialLoss,
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Invalid(r) => write!(f, "invalid ({r})"),
            Penalty::NotLearned => f.write_str("not learned"),
            Penalty::NonFinite => f.write_str("non-finite loss"),
            Penalty::ZeroInitialLoss => f.write_str("zero initial validation loss"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UndefinedR {
    TooShort,
    NonFinite,
    ZeroInitialLoss,
}

/// Returns `(delta_val, R)` for a validation trace.
pub fn compute_r(trace: &[f64]) -> Result<(f64, f64), UndefinedR> {
    if trace.len() < 2 {
        return Err(UndefinedR::TooShort);
    }
    if trace.iter().any(|v| !v.is_finite()) {
        return Err(UndefinedR::NonFinite);
    }
    let v0 = trace[0];
    if v0 == 0.0 {
        return Err(UndefinedR::ZeroInitialLoss);
    }
    let rest = &trace[1..];
    // averaging differences keeps a flat trace at exactly zero
    let delta = rest.iter().map(|v| v - v0).sum::<f64>() / rest.len() as f64;
    Ok((delta, delta / v0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessOutcome {
    pub val_trace: Vec<f64>,
    pub delta_val: Option<f64>,
    pub r: Option<f64>,
    /// `f64::INFINITY` exactly when `penalty` is set.
    #[serde(skip)]
    pub fitness: f64,
    pub penalty: Option<Penalty>,
}

impl FitnessOutcome {
    fn penalised(penalty: Penalty, val_trace: Vec<f64>, delta_val: Option<f64>, r: Option<f64>) -> Self {
        Self {
            val_trace,
            delta_val,
            r,
            fitness: f64::INFINITY,
            penalty: Some(penalty),
        }
    }
}

/// Training and validation targets in the chromosome's target space: one-hot
/// for CCE, raw values repeated across the output units for MSE.
pub fn target_space(chromosome: &Chromosome, dataset: &Dataset) -> Result<(Tensor, Tensor), InvalidReason> {
    match chromosome.loss {
        LossKind::Cce => {
            if chromosome.units != dataset.unique_targets() {
                return Err(InvalidReason::TargetWidthMismatch);
            }
            Ok((dataset.y_train_onehot.clone(), dataset.y_val_onehot.clone()))
        }
        LossKind::Mse => dataset
            .raw_targets(chromosome.units)
            .map_err(|_| InvalidReason::ZeroUnits),
    }
}

/// Full evaluation, also returning the trained network when one was built.
pub fn evaluate_with_network(
    chromosome: &Chromosome,
    dataset: &Dataset,
    nn: &NnParams,
    sub_seed: u64,
) -> (FitnessOutcome, Option<Network>) {
    let invalid = |r| (FitnessOutcome::penalised(Penalty::Invalid(r), Vec::new(), None, None), None);
    let mut rng = seed::rng(sub_seed);
    let mut network = match build_network(chromosome, &dataset.input, nn, &mut rng) {
        Ok(n) => n,
        Err(r) => return invalid(r),
    };
    let (y_train, y_val) = match target_space(chromosome, dataset) {
        Ok(t) => t,
        Err(r) => return invalid(r),
    };

    let trace = train(
        &mut network,
        Split {
            x: &dataset.x_train,
            y: &y_train,
        },
        Split {
            x: &dataset.x_val,
            y: &y_val,
        },
        &nn.train_config(),
        &mut rng,
    )
    .expect("compiled networks match the dataset geometry");

    if !trace.finite {
        return (
            FitnessOutcome::penalised(Penalty::NonFinite, trace.losses, None, None),
            Some(network),
        );
    }
    let (delta, r) = match compute_r(&trace.losses) {
        Ok(v) => v,
        Err(UndefinedR::ZeroInitialLoss) => {
            return (
                FitnessOutcome::penalised(Penalty::ZeroInitialLoss, trace.losses, None, None),
                Some(network),
            )
        }
        Err(_) => {
            return (
                FitnessOutcome::penalised(Penalty::NonFinite, trace.losses, None, None),
                Some(network),
            )
        }
    };
    if r >= 0.0 {
        return (
            FitnessOutcome::penalised(Penalty::NotLearned, trace.losses, Some(delta), Some(r)),
            Some(network),
        );
    }

    let fitness = network
        .predict(&dataset.x_val)
        .and_then(|p| mse_loss(&y_val, &p))
        .expect("prediction shape matches targets");
    if !fitness.is_finite() {
        return (
            FitnessOutcome::penalised(Penalty::NonFinite, trace.losses, Some(delta), Some(r)),
            Some(network),
        );
    }
    (
        FitnessOutcome {
            val_trace: trace.losses,
            delta_val: Some(delta),
            r: Some(r),
            fitness,
            penalty: None,
        },
        Some(network),
    )
}

/// Evaluates one chromosome. Pure in its arguments: the same `sub_seed`
/// always gives the same outcome.
pub fn evaluate(chromosome: &Chromosome, dataset: &Dataset, nn: &NnParams, sub_seed: u64) -> FitnessOutcome {
    evaluate_with_network(chromosome, dataset, nn, sub_seed).0
}

/// Trains and scores chromosomes against one dataset.
pub struct NetworkEvaluator<'a> {
    pub dataset: &'a Dataset,
    pub nn: NnParams,
}

impl Evaluator for NetworkEvaluator<'_> {
    fn fitness(&self, chromosome: &Chromosome, sub_seed: u64) -> f64 {
        evaluate(chromosome, self.dataset, &self.nn, sub_seed).fitness
    }
}

/// The search space a dataset induces.
pub fn search_space(dataset: &Dataset, ga: &GaParams) -> SearchSpace {
    SearchSpace {
        unique_targets: dataset.unique_targets(),
        input: dataset.input,
        spatial_codes_on_flat: ga.spatial_codes_on_flat,
    }
}

/// Evolves chromosomes on `dataset` and labels it from the winner.
pub fn identify(dataset: &Dataset, ga: &GaParams, nn: &NnParams, seed: u64) -> (GaRun, Verdict) {
    let evaluator = NetworkEvaluator {
        dataset,
        nn: nn.clone(),
    };
    let run = run_ga(&search_space(dataset, ga), ga, &evaluator, seed);
    let verdict = decide(run.best.as_ref());
    (run, verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Classification,
    Regression,
    /// No chromosome reached finite fitness.
    Inconclusive,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Classification => "classification",
            Label::Regression => "regression",
            Label::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub label: Label,
    /// The recommended loss, output layer and configuration.
    pub recommendation: Option<Chromosome>,
    pub diagnostic: Option<String>,
}

/// CCE means classification, MSE means regression.
pub fn decide(best: Option<&Chromosome>) -> Verdict {
    match best {
        Some(c) if c.fitness.is_finite() => Verdict {
            label: match c.loss {
                LossKind::Cce => Label::Classification,
                LossKind::Mse => Label::Regression,
            },
            recommendation: Some(c.clone()),
            diagnostic: None,
        },
        Some(c) => Verdict {
            label: Label::Inconclusive,
            recommendation: Some(c.clone()),
            diagnostic: Some("every evaluated chromosome was invalid or failed to learn".into()),
        },
        None => Verdict {
            label: Label::Inconclusive,
            recommendation: None,
            diagnostic: Some("no chromosome was evaluated".into()),
        },
    }
}
