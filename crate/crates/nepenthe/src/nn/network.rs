use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActivationKind, Layer, LayerKind, Tensor};
use crate::error::{Error, Result};
use crate::harness::Dataset;

/// Ordered chain of layers. The final layer carries `Identity` activation and
/// is excluded from the prunable list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Output of a recorded forward pass: logits plus the pre-activations of
/// every prunable layer, keyed by absolute layer index.
#[derive(Debug, Clone)]
pub struct ForwardRecord {
    pub logits: Tensor,
    pub preacts: Vec<(usize, Tensor)>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Network { layers }
    }

    /// Dense MLP with the given widths, e.g. `[2, 64, 64, 2]`.
    /// All hidden layers use `activation`; the output layer is `Identity`.
    pub fn mlp(
        sizes: &[usize],
        activation: ActivationKind,
        bias_init: f32,
        seed: u64,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidConfig("mlp needs at least 2 sizes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let last = layers.len() + 1 == sizes.len() - 1;
            let (act, binit) = if last {
                (ActivationKind::Identity, 0.0)
            } else {
                (activation, bias_init)
            };
            layers.push(Layer::new(
                LayerKind::Dense {
                    input: w[0],
                    output: w[1],
                },
                act,
                binit,
                &mut rng,
            )?);
        }
        Ok(Network { layers })
    }

    /// Indices of prunable layers: every layer with a non-Identity rectifier.
    pub fn prunable(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.activation.is_identity())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn unpruned_in_prunable(&self) -> usize {
        self.prunable()
            .into_iter()
            .map(|i| self.layers[i].unpruned_count())
            .sum()
    }

    /// Forward pass. With `record_preacts`, also returns the pre-activation
    /// tensor of every prunable layer. Pure: `self` is untouched.
    pub fn forward(&self, batch: &Tensor, record_preacts: bool) -> Result<ForwardRecord> {
        let (acts, preacts) = self.forward_full(batch)?;
        let logits = acts.last().expect("network has layers").clone();
        if !logits.all_finite() {
            return Err(Error::NonFinite("forward logits".into()));
        }
        let mut recorded = Vec::new();
        if record_preacts {
            for idx in self.prunable() {
                recorded.push((idx, preacts[idx].clone()));
            }
        }
        Ok(ForwardRecord {
            logits,
            preacts: recorded,
        })
    }

    /// Full caches for backprop: post-activation inputs of every layer
    /// (`acts[0]` is the batch, `acts[i+1] = ψ_i(z_i)`) and all pre-activations.
    pub(crate) fn forward_full(&self, batch: &Tensor) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
        let mut acts: Vec<Tensor> = vec![batch.clone()];
        let mut preacts: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = acts.last().unwrap();
            let input = flatten_for(layer, input)?;
            let z = layer.preactivations(&input)?;
            let y = layer.activate(&z);
            preacts.push(z);
            acts.push(y);
        }
        Ok((acts, preacts))
    }

    /// Top-1 accuracy; argmax ties break toward the lowest class index.
    pub fn evaluate(&self, data: &Dataset) -> Result<f64> {
        if data.len() == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut correct = 0usize;
        for (batch, labels) in data.batches(512) {
            let rec = self.forward(&batch, false)?;
            for (s, &label) in labels.iter().enumerate() {
                if argmax(rec.logits.row(s)) == label {
                    correct += 1;
                }
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

/// Lowest index wins ties.
pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Dense layers accept `[N, C, H, W]` inputs by flattening trailing dims.
pub(crate) fn flatten_for(layer: &Layer, input: &Tensor) -> Result<Tensor> {
    match layer.kind {
        LayerKind::Dense { .. } if input.shape().len() > 2 => {
            let n = input.outer();
            input.reshaped(&[n, input.row_len()])
        }
        _ => Ok(input.clone()),
    }
}
