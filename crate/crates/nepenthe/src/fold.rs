//! Removal of zero-entropy layers.
//!
//! On the probing dataset a zero-entropy rectifier layer acts affinely:
//! always-ON neurons pass their pre-activation through, always-OFF ReLU
//! neurons contribute nothing (LeakyReLU neurons contribute an α-scaled
//! copy). The layer's affine map can therefore be composed into the next
//! dense layer, reducing depth by one. GELU/SiLU layers fold with the
//! identity/zero approximation of the two regions; their deviation is
//! reported, not guaranteed.

use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyReport, LayerEntropy};
use crate::error::{Error, Result};
use crate::nn::{ActivationKind, Layer, LayerKind, Network, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronRole {
    On,
    Off,
    Mixed,
}

/// Labels from a probe: ON iff the neuron saw no OFF state and at least one
/// ON state; OFF iff it saw no ON state (don't-cares are compatible with
/// both and resolve to OFF, where ψ(0)=0 makes removal exact).
pub fn classify_neurons(report: &LayerEntropy) -> Vec<NeuronRole> {
    report
        .neurons
        .iter()
        .map(|n| {
            if n.entropy_bits != 0.0 {
                NeuronRole::Mixed
            } else if n.p_on == 1.0 {
                NeuronRole::On
            } else {
                NeuronRole::Off
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldedLayer {
    pub original_index: usize,
    pub on_neurons: usize,
    pub off_neurons: usize,
    /// The folded activation was not exactly piecewise linear.
    pub approximate: bool,
    pub merged_inputs: usize,
    pub merged_outputs: usize,
}

fn dense_dims(layer: &Layer) -> Option<(usize, usize)> {
    match layer.kind {
        LayerKind::Dense { input, output } => Some((input, output)),
        _ => None,
    }
}

/// Fold layer `l` into layer `l+1`. Requires zero layer entropy and a
/// dense→dense pair; ReLU and LeakyReLU fold exactly, GELU and SiLU fold
/// with the linear approximation.
pub fn fold_layer(net: &Network, l: usize, report: &EntropyReport) -> Result<(Network, FoldedLayer)> {
    let unsupported = |reason: &str| Error::FoldUnsupported {
        layer: l,
        reason: reason.to_string(),
    };
    if l + 1 >= net.layers.len() {
        return Err(unsupported("no following layer to absorb into"));
    }
    let lr = report
        .layer(l)
        .ok_or_else(|| unsupported("layer missing from entropy report"))?;
    if lr.mean_entropy != 0.0 {
        return Err(unsupported(&format!(
            "layer entropy {} is not zero",
            lr.mean_entropy
        )));
    }
    let this = &net.layers[l];
    let next = &net.layers[l + 1];
    let (fin, fout) = dense_dims(this).ok_or_else(|| unsupported("only dense layers fold"))?;
    let (nin, nout) = dense_dims(next).ok_or_else(|| unsupported("next layer is not dense"))?;
    debug_assert_eq!(fout, nin);

    let (off_gain, approximate) = match this.activation {
        ActivationKind::Relu => (0.0f64, false),
        ActivationKind::LeakyRelu { slope } => (f64::from(slope), false),
        ActivationKind::Gelu | ActivationKind::Silu => (0.0, true),
        ActivationKind::Identity => return Err(unsupported("identity layers are not in the prunable list")),
        _ => {
            return Err(unsupported(&format!(
                "activation {} is not foldable",
                this.activation.name()
            )))
        }
    };

    let roles = classify_neurons(lr);
    let on_neurons = roles.iter().filter(|r| matches!(r, NeuronRole::On)).count();
    let off_neurons = roles.len() - on_neurons;

    // post-treatment affine map of layer l, in f64
    let mut wt = vec![0.0f64; fout * fin];
    let mut bt = vec![0.0f64; fout];
    for i in 0..fout {
        let gain = match roles[i] {
            NeuronRole::On => 1.0,
            NeuronRole::Off => off_gain,
            NeuronRole::Mixed => unreachable!("zero-entropy layer has no mixed neurons"),
        };
        if gain == 0.0 {
            continue;
        }
        let (w, m) = this.neuron_weights(i);
        for j in 0..fin {
            wt[i * fin + j] = gain * f64::from(w[j]) * f64::from(m[j]);
        }
        bt[i] = gain * f64::from(this.bias.data()[i]);
    }

    // merged = next ∘ treated
    let mut wm = vec![0.0f32; nout * fin];
    let mut bm = vec![0.0f32; nout];
    for o in 0..nout {
        let (nw, nm) = next.neuron_weights(o);
        for j in 0..fin {
            let mut acc = 0.0f64;
            for k in 0..nin {
                acc += f64::from(nw[k]) * f64::from(nm[k]) * wt[k * fin + j];
            }
            wm[o * fin + j] = acc as f32;
        }
        let mut acc = f64::from(next.bias.data()[o]);
        for k in 0..nin {
            acc += f64::from(nw[k]) * f64::from(nm[k]) * bt[k];
        }
        bm[o] = acc as f32;
    }

    let merged = Layer {
        kind: LayerKind::Dense {
            input: fin,
            output: nout,
        },
        weights: Tensor::from_vec(&[nout, fin], wm)?,
        bias: Tensor::from_vec(&[nout], bm)?,
        // folding densifies: the merged map starts fully trainable
        mask: Tensor::ones(&[nout, fin]),
        activation: next.activation,
        prelu_slopes: next.prelu_slopes.clone(),
    };

    let mut layers = net.layers.clone();
    layers.splice(l..=l + 1, [merged]);
    Ok((
        Network::new(layers),
        FoldedLayer {
            original_index: l,
            on_neurons,
            off_neurons,
            approximate,
            merged_inputs: fin,
            merged_outputs: nout,
        },
    ))
}

/// Fold every foldable zero-entropy layer, walking back to front so earlier
/// indices stay valid; unfoldable layers are skipped.
pub fn fold_all(net: &Network, report: &EntropyReport) -> Result<(Network, Vec<FoldedLayer>)> {
    let mut current = net.clone();
    let mut removed = Vec::new();
    let mut indices: Vec<usize> = report
        .layers
        .iter()
        .filter(|l| l.removable())
        .map(|l| l.layer_index)
        .collect();
    indices.sort_unstable_by(|a, b| b.cmp(a));
    for l in indices {
        match fold_layer(&current, l, report) {
            Ok((folded, info)) => {
                current = folded;
                removed.push(info);
            }
            Err(Error::FoldUnsupported { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    removed.reverse();
    Ok((current, removed))
}

/// Largest absolute logit difference between two networks over a dataset.
pub fn max_deviation(a: &Network, b: &Network, data: &crate::harness::Dataset) -> Result<f64> {
    let mut worst = 0.0f64;
    for (batch, _) in data.batches(512) {
        let ra = a.forward(&batch, false)?;
        let rb = b.forward(&batch, false)?;
        for (x, y) in ra.logits.data().iter().zip(rb.logits.data()) {
            worst = worst.max(f64::from((x - y).abs()));
        }
    }
    Ok(worst)
}

/// Human-readable fold manifest.
pub fn fold_manifest(
    removed: &[FoldedLayer],
    deviation_reference: f64,
    deviation_heldout: Option<f64>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("removed_layers: {}\n", removed.len()));
    for f in removed {
        out.push_str(&format!(
            "layer {}: on={} off={} merged={}->{}{}\n",
            f.original_index,
            f.on_neurons,
            f.off_neurons,
            f.merged_inputs,
            f.merged_outputs,
            if f.approximate { " (approximate fold)" } else { "" }
        ));
    }
    out.push_str(&format!("max_deviation_reference: {deviation_reference:.3e}\n"));
    match deviation_heldout {
        Some(d) => out.push_str(&format!("max_deviation_heldout: {d:.3e}\n")),
        None => out.push_str("max_deviation_heldout: n/a\n"),
    }
    out
}
