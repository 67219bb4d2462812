//! Minimal deterministic feed-forward core: dense and 2-D convolution layers
//! with rectifier activations, reverse-mode gradients, and momentum SGD.
//!
//! All dot products and reductions accumulate in `f64` and round to `f32` at
//! layer boundaries, in a fixed sequential order, so a given seed reproduces
//! a training run bit for bit.

mod activation;
mod checkpoint;
mod layer;
mod network;
mod tensor;
mod train;

pub use activation::ActivationKind;
pub use layer::{Layer, LayerKind};
pub use network::{ForwardRecord, Network};
pub use tensor::Tensor;
pub use train::{grad_check, train, TrainConfig, TrainStats};
