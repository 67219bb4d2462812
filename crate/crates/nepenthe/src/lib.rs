//! Depth reduction for rectifier-activated feed-forward networks.
//!
//! The crate trains small dense/conv networks, measures per-neuron ON/OFF
//! entropy over a dataset, runs entropy-weighted iterative unstructured
//! pruning (with a plain global magnitude baseline), folds zero-entropy
//! layers into their successors, and evaluates the analytic
//! pruning-threshold → output-entropy curve with a Monte Carlo cross-check.
//!
//! Modules map onto the pipeline stages:
//! - [`nn`]: tensors, layers, forward/backward, SGD training, checkpoints
//! - [`entropy`]: neuron state statistics and entropy reports
//! - [`prune`]: budget allocation and the iterative pruning loops
//! - [`fold`]: removal of zero-entropy layers by affine composition
//! - [`theory`]: special functions and the threshold/entropy curve
//! - [`harness`]: datasets, experiment configs, runners, reports

pub mod entropy;
pub mod error;
pub mod fold;
pub mod harness;
pub mod nn;
pub mod prune;
pub mod theory;

pub use error::{Error, Result};
