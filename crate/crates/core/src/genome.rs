//! The four-gene chromosome and its compilation into a network.
//!
//! A chromosome holds a loss, an output unit count, an output activation and
//! a configuration: an ordered list of hidden layer codes
//! (0 convolution, 1 fully-connected, 2 dropout, 3 max-pooling). Compiling a
//! chromosome against an input geometry either yields a shape-consistent
//! layer plan or an [`InvalidReason`].

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::InputShape;
use crate::error::{Error, Result};
use crate::nn::{Activation, LayerSpec, LossKind, Network};
use crate::params::NnParams;
use crate::Rng;

pub const MIN_CONFIGURATION_LEN: usize = 5;
pub const MAX_CONFIGURATION_LEN: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum LayerCode {
    Convolution = 0,
    FullyConnected = 1,
    Dropout = 2,
    MaxPooling = 3,
}

impl LayerCode {
    pub const ALL: [LayerCode; 4] = [
        LayerCode::Convolution,
        LayerCode::FullyConnected,
        LayerCode::Dropout,
        LayerCode::MaxPooling,
    ];
    /// Codes that compile on flat (non-image) inputs.
    pub const FLAT: [LayerCode; 2] = [LayerCode::FullyConnected, LayerCode::Dropout];

    pub fn is_spatial(self) -> bool {
        matches!(self, LayerCode::Convolution | LayerCode::MaxPooling)
    }
}

impl From<LayerCode> for u8 {
    fn from(c: LayerCode) -> u8 {
        c as u8
    }
}

impl TryFrom<u8> for LayerCode {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        LayerCode::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| format!("layer code {v} is not in 0..=3"))
    }
}

mod fitness_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    /// Infinite fitness is written as `null`.
    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub loss: LossKind,
    pub units: usize,
    pub activation: Activation,
    pub configuration: Vec<LayerCode>,
    /// Lower is better; `f64::INFINITY` until evaluated or when penalised.
    #[serde(with = "fitness_serde")]
    pub fitness: f64,
}

impl Chromosome {
    pub fn new(loss: LossKind, units: usize, activation: Activation, configuration: Vec<LayerCode>) -> Self {
        Self {
            loss,
            units,
            activation,
            configuration,
            fitness: f64::INFINITY,
        }
    }

    /// True when all four genes match, ignoring fitness.
    pub fn same_genes(&self, other: &Chromosome) -> bool {
        self.loss == other.loss
            && self.units == other.units
            && self.activation == other.activation
            && self.configuration == other.configuration
    }

    /// Renders `Units: 1, Loss: MSE, Activation: relu, Configuration: [1, 2, 1, 1]`.
    pub fn describe(&self) -> String {
        self.to_string()
    }

    pub fn gene_differs(&self, other: &Chromosome, gene: Gene) -> bool {
        match gene {
            Gene::Loss => self.loss != other.loss,
            Gene::Units => self.units != other.units,
            Gene::Activation => self.activation != other.activation,
            Gene::Configuration => self.configuration != other.configuration,
        }
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<String> = self.configuration.iter().map(|&c| u8::from(c).to_string()).collect();
        write!(
            f,
            "Units: {}, Loss: {}, Activation: {}, Configuration: [{}]",
            self.units,
            self.loss,
            self.activation,
            codes.join(", ")
        )
    }
}

impl FromStr for Chromosome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Chromosome(msg);
        let (head, tail) = s
            .split_once("Configuration:")
            .ok_or_else(|| bad("missing 'Configuration:'".into()))?;

        let (mut units, mut loss, mut activation) = (None, None, None);
        for field in head.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            let (key, value) = field
                .split_once(':')
                .ok_or_else(|| bad(format!("expected 'key: value', got '{field}'")))?;
            let value = value.trim();
            match key.trim() {
                "Units" => {
                    units = Some(
                        value
                            .parse::<usize>()
                            .ok()
                            .filter(|&u| u > 0)
                            .ok_or_else(|| bad(format!("bad unit count '{value}'")))?,
                    )
                }
                "Loss" => loss = Some(value.parse::<LossKind>().map_err(bad)?),
                "Activation" => activation = Some(value.parse::<Activation>().map_err(bad)?),
                other => return Err(bad(format!("unknown field '{other}'"))),
            }
        }

        let list = tail
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| bad("configuration must be a bracketed list".into()))?;
        let configuration = list
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(|c| {
                c.parse::<u8>()
                    .map_err(|e| e.to_string())
                    .and_then(LayerCode::try_from)
                    .map_err(bad)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Chromosome::new(
            loss.ok_or_else(|| bad("missing Loss".into()))?,
            units.ok_or_else(|| bad("missing Units".into()))?,
            activation.ok_or_else(|| bad("missing Activation".into()))?,
            configuration,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gene {
    Loss,
    Units,
    Activation,
    Configuration,
}

impl Gene {
    pub const ALL: [Gene; 4] = [Gene::Loss, Gene::Units, Gene::Activation, Gene::Configuration];
}

/// Value sets the genes are drawn from for one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub unique_targets: usize,
    pub input: InputShape,
    /// Allow convolution/pooling codes even when the input is flat.
    pub spatial_codes_on_flat: bool,
}

impl SearchSpace {
    pub fn new(unique_targets: usize, input: InputShape) -> Self {
        Self {
            unique_targets,
            input,
            spatial_codes_on_flat: false,
        }
    }

    pub fn layer_codes(&self) -> &'static [LayerCode] {
        if self.input.is_image() || self.spatial_codes_on_flat {
            &LayerCode::ALL
        } else {
            &LayerCode::FLAT
        }
    }

    /// Length uniform in `5..=15`, each code uniform over [`Self::layer_codes`].
    pub fn random_configuration(&self, rng: &mut Rng) -> Vec<LayerCode> {
        let len = rng.random_range(MIN_CONFIGURATION_LEN..=MAX_CONFIGURATION_LEN);
        let codes = self.layer_codes();
        (0..len)
            .map(|_| *codes.choose(rng).expect("code set is non-empty"))
            .collect()
    }

    pub fn random_chromosome(&self, rng: &mut Rng) -> Chromosome {
        let loss = *LossKind::ALL.choose(rng).expect("non-empty");
        let units = self.random_units(rng);
        let activation = *Activation::ALL.choose(rng).expect("non-empty");
        let configuration = self.random_configuration(rng);
        Chromosome::new(loss, units, activation, configuration)
    }

    fn random_units(&self, rng: &mut Rng) -> usize {
        if rng.random_bool(0.5) {
            1
        } else {
            self.unique_targets
        }
    }

    /// Redraws `gene` from its value set; the new value may equal the old.
    pub fn redraw(&self, chromosome: &mut Chromosome, gene: Gene, rng: &mut Rng) {
        match gene {
            Gene::Loss => chromosome.loss = *LossKind::ALL.choose(rng).expect("non-empty"),
            Gene::Units => chromosome.units = self.random_units(rng),
            Gene::Activation => chromosome.activation = *Activation::ALL.choose(rng).expect("non-empty"),
            Gene::Configuration => chromosome.configuration = self.random_configuration(rng),
        }
    }
}

/// Why a chromosome cannot be turned into a trainable network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidReason {
    /// Convolution or pooling requested on a flat input.
    SpatialOnFlat,
    /// CCE needs one output per class but the chromosome has one unit.
    CceSingleOutput,
    /// Convolution or pooling after the data has been flattened.
    SpatialAfterFlatten,
    /// A spatial layer would see less than its window in some dimension.
    SpatialTooSmall,
    /// Output width cannot be matched against the training targets.
    TargetWidthMismatch,
    ZeroUnits,
}

impl InvalidReason {
    pub fn code(self) -> &'static str {
        match self {
            InvalidReason::SpatialOnFlat => "spatial-on-flat",
            InvalidReason::CceSingleOutput => "cce-single-output",
            InvalidReason::SpatialAfterFlatten => "spatial-after-flatten",
            InvalidReason::SpatialTooSmall => "spatial-too-small",
            InvalidReason::TargetWidthMismatch => "target-width-mismatch",
            InvalidReason::ZeroUnits => "zero-units",
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

enum Geometry {
    Spatial { height: usize, width: usize, channels: usize },
    Flat { features: usize, flattened: bool },
}

/// Compiles the chromosome's layers for `input`, inserting a flatten step
/// before the first dense layer that follows spatial data and appending the
/// output layer.
pub fn plan_network(
    chromosome: &Chromosome,
    input: &InputShape,
    nn: &NnParams,
) -> Result<Vec<LayerSpec>, InvalidReason> {
    if chromosome.units == 0 {
        return Err(InvalidReason::ZeroUnits);
    }
    if chromosome.loss == LossKind::Cce && chromosome.units == 1 {
        return Err(InvalidReason::CceSingleOutput);
    }

    let mut geometry = match *input {
        InputShape::Flat { features } => Geometry::Flat {
            features,
            flattened: false,
        },
        InputShape::Image {
            height,
            width,
            channels,
        } => Geometry::Spatial {
            height,
            width,
            channels,
        },
    };
    let mut specs = Vec::with_capacity(chromosome.configuration.len() + 2);

    let flatten = |geometry: &mut Geometry, specs: &mut Vec<LayerSpec>| -> usize {
        match *geometry {
            Geometry::Spatial {
                height,
                width,
                channels,
            } => {
                let features = height * width * channels;
                specs.push(LayerSpec::Flatten { features });
                *geometry = Geometry::Flat {
                    features,
                    flattened: true,
                };
                features
            }
            Geometry::Flat { features, .. } => features,
        }
    };

    for &code in &chromosome.configuration {
        match code {
            LayerCode::Convolution | LayerCode::MaxPooling => {
                let (height, width, channels) = match geometry {
                    Geometry::Flat { flattened: false, .. } => return Err(InvalidReason::SpatialOnFlat),
                    Geometry::Flat { flattened: true, .. } => return Err(InvalidReason::SpatialAfterFlatten),
                    Geometry::Spatial {
                        height,
                        width,
                        channels,
                    } => (height, width, channels),
                };
                let k = if code == LayerCode::Convolution {
                    nn.conv_kernel
                } else {
                    nn.pool_window
                };
                if height < k || width < k {
                    return Err(InvalidReason::SpatialTooSmall);
                }
                let out_channels = if code == LayerCode::Convolution {
                    specs.push(LayerSpec::Convolution {
                        height,
                        width,
                        channels,
                        filters: nn.conv_filters,
                        kernel: k,
                    });
                    nn.conv_filters
                } else {
                    specs.push(LayerSpec::MaxPooling {
                        height,
                        width,
                        channels,
                        window: k,
                    });
                    channels
                };
                geometry = Geometry::Spatial {
                    height: height + 1 - k,
                    width: width + 1 - k,
                    channels: out_channels,
                };
            }
            LayerCode::Dropout => specs.push(LayerSpec::Dropout {
                keep_prob: nn.keep_prob,
            }),
            LayerCode::FullyConnected => {
                let inputs = flatten(&mut geometry, &mut specs);
                specs.push(LayerSpec::FullyConnected {
                    inputs,
                    units: nn.hidden_units,
                });
                geometry = Geometry::Flat {
                    features: nn.hidden_units,
                    flattened: input.is_image(),
                };
            }
        }
    }

    let inputs = flatten(&mut geometry, &mut specs);
    specs.push(LayerSpec::OutputDense {
        inputs,
        units: chromosome.units,
        activation: chromosome.activation,
    });
    Ok(specs)
}

/// A compiled network, or the reason the chromosome cannot be compiled.
pub fn build_network(
    chromosome: &Chromosome,
    input: &InputShape,
    nn: &NnParams,
    rng: &mut Rng,
) -> Result<Network, InvalidReason> {
    let specs = plan_network(chromosome, input, nn)?;
    Ok(Network::from_specs(&input.dims(), &specs, chromosome.loss, nn.init, rng)
        .expect("planned layers always end in one output layer"))
}
