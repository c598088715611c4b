//! A small feed-forward engine: convolution, max-pooling, dropout and dense
//! layers over [`Tensor`], trained with backpropagation and Adam.

mod activation;
mod adam;
mod layer;
mod linalg;
mod loss;
mod network;
mod tensor;
mod train;

pub use activation::Activation;
pub use adam::AdamState;
pub use layer::{init_bias, init_weights, Layer, LayerKind, LayerSpec, WeightInit};
pub use loss::{cce_loss, mse_loss, LossKind, CCE_EPSILON};
pub use network::{Mode, Network};
pub use tensor::Tensor;
pub use train::{train, Split, TrainConfig, ValidationTrace};
