use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{gen_synthetic, load_idx, Dataset, SyntheticKind};
use crate::nn::{ActivationKind, Layer, LayerKind, Network, TrainConfig};
use crate::prune::{PruneConfig, PruneMethod};

pub const ENV_SEED: &str = "NEPENTHE_SEED";
pub const ENV_OUT: &str = "NEPENTHE_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        kind: SyntheticKind,
        n: usize,
        noise: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum ModelPreset {
    /// 2-64-64-64-64-2 MLP.
    MlpDeep,
    /// 2-256-256-2 MLP.
    MlpWide,
    /// Two conv stages then two dense stages, for image inputs.
    CnnTiny,
    /// Explicit hidden widths.
    Mlp { hidden: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub preset: ModelPreset,
    pub activation: ActivationKind,
    /// Hidden-layer bias initialization. Positive values start rectifier
    /// units in their linear region, which the depth-reduction loop relies
    /// on at small scale.
    pub bias_init: f32,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub retrain: TrainConfig,
    pub prune: PruneConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Fold removable layers of the returned model and write the manifest.
    pub fold: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::Synthetic {
                kind: SyntheticKind::Blobs,
                n: 2000,
                noise: 0.2,
            },
            model: ModelSpec {
                preset: ModelPreset::MlpDeep,
                activation: ActivationKind::Relu,
                bias_init: 1.0,
            },
            train: TrainConfig {
                epochs: 60,
                batch_size: 256,
                lr: 0.01,
                momentum: 0.9,
                weight_decay: 1e-4,
                lr_milestones: vec![40, 52],
                lr_drop: 0.1,
                rng_seed: 0, // derived from `seed` at load time
            },
            retrain: TrainConfig {
                epochs: 10,
                batch_size: 256,
                lr: 0.002,
                momentum: 0.9,
                weight_decay: 0.0,
                lr_milestones: vec![6, 8],
                lr_drop: 0.1,
                rng_seed: 0,
            },
            prune: PruneConfig {
                zeta: 0.5,
                theta: 0.97,
                max_iterations: 7,
                method: PruneMethod::Nepenthe,
                exclude_zero_entropy_layers: false,
                eps_state: 0.0,
            },
            output_dir: PathBuf::from("runs/default"),
            seed: 1,
            fold: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.apply_env();
        cfg.derive_seeds();
        Ok(cfg)
    }

    /// Environment overrides for the seed and the output directory.
    pub fn apply_env(&mut self) {
        if let Ok(s) = std::env::var(ENV_SEED) {
            if let Ok(v) = s.parse::<u64>() {
                self.seed = v;
            }
        }
        if let Ok(s) = std::env::var(ENV_OUT) {
            if !s.is_empty() {
                self.output_dir = PathBuf::from(s);
            }
        }
    }

    /// Sub-seeds are fixed offsets of the experiment seed so one value pins
    /// the whole run.
    pub fn derive_seeds(&mut self) {
        self.train.rng_seed = self.seed.wrapping_add(1000);
        self.retrain.rng_seed = self.seed.wrapping_add(2000);
    }

    pub fn split_seed(&self) -> u64 {
        self.seed.wrapping_add(3000)
    }

    pub fn model_seed(&self) -> u64 {
        self.seed
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSpec::Synthetic { kind, n, noise } => gen_synthetic(*kind, *n, *noise, self.seed),
            DatasetSpec::Idx { images, labels } => load_idx(images, labels),
        }
    }

    /// Instantiate the model for a dataset's input/output shape.
    pub fn build_model(&self, data: &Dataset) -> Result<Network> {
        let classes = data.classes;
        let sample = &data.inputs.shape()[1..];
        let act = self.model.activation;
        let bias = self.model.bias_init;
        match &self.model.preset {
            ModelPreset::MlpDeep => {
                let fin: usize = sample.iter().product();
                Network::mlp(&[fin, 64, 64, 64, 64, classes], act, bias, self.model_seed())
            }
            ModelPreset::MlpWide => {
                let fin: usize = sample.iter().product();
                Network::mlp(&[fin, 256, 256, classes], act, bias, self.model_seed())
            }
            ModelPreset::Mlp { hidden } => {
                let fin: usize = sample.iter().product();
                let mut sizes = vec![fin];
                sizes.extend_from_slice(hidden);
                sizes.push(classes);
                Network::mlp(&sizes, act, bias, self.model_seed())
            }
            ModelPreset::CnnTiny => {
                if sample.len() != 3 {
                    return Err(Error::InvalidConfig(format!(
                        "cnn-tiny needs [C, H, W] inputs, dataset has {sample:?}"
                    )));
                }
                let (c, h, w) = (sample[0], sample[1], sample[2]);
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.model_seed());
                let conv1 = Layer::new(
                    LayerKind::Conv2d {
                        in_channels: c,
                        out_channels: 8,
                        kernel: 3,
                        stride: 1,
                        padding: 1,
                    },
                    act,
                    bias,
                    &mut rng,
                )?;
                let conv2 = Layer::new(
                    LayerKind::Conv2d {
                        in_channels: 8,
                        out_channels: 16,
                        kernel: 3,
                        stride: 2,
                        padding: 1,
                    },
                    act,
                    bias,
                    &mut rng,
                )?;
                let (h2, w2) = (h.div_ceil(2), w.div_ceil(2));
                let dense = Layer::new(
                    LayerKind::Dense {
                        input: 16 * h2 * w2,
                        output: 32,
                    },
                    act,
                    bias,
                    &mut rng,
                )?;
                let out = Layer::new(
                    LayerKind::Dense {
                        input: 32,
                        output: classes,
                    },
                    ActivationKind::Identity,
                    0.0,
                    &mut rng,
                )?;
                Ok(Network::new(vec![conv1, conv2, dense, out]))
            }
        }
    }
}
