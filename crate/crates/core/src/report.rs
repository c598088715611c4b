//! JSON run report.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ImageShape};
use crate::evolution::{GaRun, GenerationStats};
use crate::fitness::{Label, Verdict};
use crate::genome::LayerCode;
use crate::nn::{Activation, LossKind};
use crate::params::{GaParams, NnParams};

pub const TOOL: &str = "probident";
pub const SCHEMA: &str = include_str!("../schema/run-report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub label: Label,
    pub loss: Option<LossKind>,
    pub units: Option<usize>,
    pub activation: Option<Activation>,
    pub configuration: Option<Vec<LayerCode>>,
    /// e.g. `Units: 3, Loss: CCE, Activation: softmax, Configuration: [1, 1, 2, 1, 1]`
    pub chromosome: Option<String>,
    pub diagnostic: Option<String>,
}

impl From<&Verdict> for VerdictReport {
    fn from(v: &Verdict) -> Self {
        let c = v.recommendation.as_ref();
        Self {
            label: v.label,
            loss: c.map(|c| c.loss),
            units: c.map(|c| c.units),
            activation: c.map(|c| c.activation),
            configuration: c.map(|c| c.configuration.clone()),
            chromosome: c.map(|c| c.to_string()),
            diagnostic: v.diagnostic.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub path: String,
    pub target_column: String,
    pub samples: usize,
    pub features: usize,
    pub unique_targets: usize,
    pub input_kind: String,
    pub image_shape: Option<ImageShape>,
    pub train_samples: usize,
    pub validation_samples: usize,
}

impl DatasetSummary {
    pub fn new(path: &str, target_column: &str, features: usize, image: Option<ImageShape>, ds: &Dataset) -> Self {
        Self {
            path: path.to_string(),
            target_column: target_column.to_string(),
            samples: ds.total_samples,
            features,
            unique_targets: ds.unique_targets(),
            input_kind: ds.input.kind_name().to_string(),
            image_shape: image,
            train_samples: ds.train_rows.len(),
            validation_samples: ds.val_rows.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub verdict: VerdictReport,
    /// `null` when no chromosome reached finite fitness.
    pub best_fitness: Option<f64>,
    pub history: Vec<GenerationStats>,
    pub dataset: DatasetSummary,
    pub ga_params: GaParams,
    pub nn_params: NnParams,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub evaluations: usize,
    pub duration_seconds: f64,
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        verdict: &Verdict,
        run: &GaRun,
        dataset: DatasetSummary,
        ga_params: &GaParams,
        nn_params: &NnParams,
        seed: u64,
        jobs: Option<usize>,
        duration_seconds: f64,
    ) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            verdict: verdict.into(),
            best_fitness: run.best.as_ref().map(|c| c.fitness).filter(|f| f.is_finite()),
            history: run.history.clone(),
            dataset,
            ga_params: ga_params.clone(),
            nn_params: nn_params.clone(),
            seed,
            jobs,
            evaluations: run.evaluations,
            duration_seconds,
        }
    }

    pub fn is_conclusive(&self) -> bool {
        self.verdict.label != Label::Inconclusive
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
