//! Neuron state statistics and entropy over a dataset.
//!
//! A neuron's state for one observation is the sign of its pre-activation:
//! ON (+1), OFF (−1), or don't-care (0, excluded from the probability).
//! Convolutional neurons contribute one observation per spatial position of
//! their feature map. A layer is removable when its mean entropy is zero,
//! i.e. every neuron is constant-state on the dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::nn::{LayerKind, Network, Tensor};

/// Per-neuron ON/OFF/don't-care counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateCounts {
    pub on: u64,
    pub off: u64,
    pub zero: u64,
}

impl StateCounts {
    pub fn observations(&self) -> u64 {
        self.on + self.off + self.zero
    }

    /// Count of decided (non-don't-care) observations.
    pub fn decided(&self) -> u64 {
        self.on + self.off
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuronEntropy {
    pub counts: StateCounts,
    pub p_on: f64,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerEntropy {
    /// Absolute index of the layer in the network.
    pub layer_index: usize,
    pub neurons: Vec<NeuronEntropy>,
    pub mean_entropy: f64,
}

impl LayerEntropy {
    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn removable(&self) -> bool {
        self.mean_entropy == 0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyReport {
    pub iteration: usize,
    pub layers: Vec<LayerEntropy>,
}

impl EntropyReport {
    pub fn layer(&self, layer_index: usize) -> Option<&LayerEntropy> {
        self.layers.iter().find(|l| l.layer_index == layer_index)
    }

    /// Layer mean entropies sorted ascending.
    pub fn sorted_layer_entropies(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.layers.iter().map(|l| l.mean_entropy).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    pub fn removable_count(&self) -> usize {
        self.layers.iter().filter(|l| l.removable()).count()
    }

    /// Smallest strictly positive layer entropy, if any.
    pub fn min_positive_entropy(&self) -> Option<f64> {
        self.layers
            .iter()
            .map(|l| l.mean_entropy)
            .filter(|&h| h > 0.0)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

/// Sign states of a slice of pre-activations: +1 above `eps_state`, −1 below
/// `−eps_state`, 0 otherwise. The default threshold is exactly zero.
pub fn neuron_states(preact: &[f32], eps_state: f32) -> Vec<i8> {
    preact
        .iter()
        .map(|&z| {
            if z > eps_state {
                1
            } else if z < -eps_state {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// ON probability among decided observations; zero when nothing is decided.
pub fn state_probability(counts: &StateCounts) -> f64 {
    let s = counts.decided();
    if s == 0 {
        0.0
    } else {
        counts.on as f64 / s as f64
    }
}

/// Binary entropy in bits with the 0·log0 := 0 convention.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0,1]")));
    }
    Ok(h2(p))
}

pub(crate) fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Mean neuron entropy of a layer.
pub fn layer_entropy(neuron_entropies: &[f64]) -> Result<f64> {
    if neuron_entropies.is_empty() {
        return Err(Error::Domain("layer entropy of an empty layer".into()));
    }
    Ok(neuron_entropies.iter().sum::<f64>() / neuron_entropies.len() as f64)
}

/// Accumulate states over one recorded pre-activation tensor.
fn accumulate(counts: &mut [StateCounts], kind: &LayerKind, preact: &Tensor, eps_state: f32) {
    let neurons = counts.len();
    let positions = match kind {
        LayerKind::Dense { .. } => 1,
        LayerKind::Conv2d { .. } => preact.row_len() / neurons,
    };
    for s in 0..preact.outer() {
        let row = preact.row(s);
        for (i, c) in counts.iter_mut().enumerate() {
            for p in 0..positions {
                let z = row[i * positions + p];
                if z > eps_state {
                    c.on += 1;
                } else if z < -eps_state {
                    c.off += 1;
                } else {
                    c.zero += 1;
                }
            }
        }
    }
}

/// One pass over the dataset, counting states for every prunable layer.
pub fn probe(net: &Network, data: &Dataset, eps_state: f32, iteration: usize) -> Result<EntropyReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let prunable = net.prunable();
    let mut counts: Vec<Vec<StateCounts>> = prunable
        .iter()
        .map(|&i| vec![StateCounts::default(); net.layers[i].neuron_count()])
        .collect();

    for (batch, _) in data.batches(512) {
        let rec = net.forward(&batch, true)?;
        for (slot, (layer_index, preact)) in rec.preacts.iter().enumerate() {
            accumulate(
                &mut counts[slot],
                &net.layers[*layer_index].kind,
                preact,
                eps_state,
            );
        }
    }

    let mut layers = Vec::with_capacity(prunable.len());
    for (slot, &layer_index) in prunable.iter().enumerate() {
        let neurons: Vec<NeuronEntropy> = counts[slot]
            .iter()
            .map(|&c| {
                let p = state_probability(&c);
                NeuronEntropy {
                    counts: c,
                    p_on: p,
                    entropy_bits: h2(p),
                }
            })
            .collect();
        let mean = layer_entropy(&neurons.iter().map(|n| n.entropy_bits).collect::<Vec<_>>())?;
        layers.push(LayerEntropy {
            layer_index,
            neurons,
            mean_entropy: mean,
        });
    }
    Ok(EntropyReport { iteration, layers })
}

/// CSV with one row per neuron.
pub const NEURON_CSV_HEADER: &str = "iteration,layer,neuron,n_on,n_off,n_zero,p_on,H";

pub fn neuron_csv(report: &EntropyReport) -> String {
    let mut out = String::from(NEURON_CSV_HEADER);
    out.push('\n');
    for layer in &report.layers {
        for (i, n) in layer.neurons.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.6},{:.6}\n",
                report.iteration,
                layer.layer_index,
                i,
                n.counts.on,
                n.counts.off,
                n.counts.zero,
                n.p_on,
                n.entropy_bits
            ));
        }
    }
    out
}

/// CSV with one summary row per layer.
pub const LAYER_CSV_HEADER: &str = "iteration,layer,N_l,H_layer,removable";

pub fn layer_csv(report: &EntropyReport) -> String {
    let mut out = String::from(LAYER_CSV_HEADER);
    out.push('\n');
    for layer in &report.layers {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            report.iteration,
            layer.layer_index,
            layer.neuron_count(),
            layer.mean_entropy,
            u8::from(layer.removable())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SplitTag;
    use crate::nn::{ActivationKind, Layer, Network};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn states_by_sign() {
        assert_eq!(neuron_states(&[1.2, -0.3, 0.0], 0.0), vec![1, -1, 0]);
        assert_eq!(neuron_states(&[0.5, 2.0, 0.1], 0.0), vec![1, 1, 1]);
        // sub-threshold magnitude is a don't-care
        assert_eq!(neuron_states(&[1e-9], 1e-6), vec![0]);
    }

    #[test]
    fn probability_excludes_dont_cares() {
        let p = state_probability(&StateCounts { on: 2, off: 2, zero: 0 });
        assert_eq!(p, 0.5);
        let p = state_probability(&StateCounts { on: 0, off: 0, zero: 3 });
        assert_eq!(p, 0.0);
        let p = state_probability(&StateCounts { on: 3, off: 0, zero: 1 });
        assert_eq!(p, 1.0);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_relative_eq!(binary_entropy(0.25).unwrap(), 0.811_278_124_459_132_8, epsilon = 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn layer_entropy_means() {
        assert_eq!(layer_entropy(&[1.0, 0.0, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(layer_entropy(&[0.3]).unwrap(), 0.3);
        assert_eq!(layer_entropy(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(layer_entropy(&[]).is_err());
    }

    fn single_neuron_net() -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = Layer::new(
            LayerKind::Dense { input: 1, output: 1 },
            ActivationKind::Relu,
            0.0,
            &mut rng,
        )
        .unwrap();
        l.weights.data_mut()[0] = 1.0;
        let mut out = Layer::new(
            LayerKind::Dense { input: 1, output: 2 },
            ActivationKind::Identity,
            0.0,
            &mut rng,
        )
        .unwrap();
        out.weights.data_mut().copy_from_slice(&[1.0, -1.0]);
        Network::new(vec![l, out])
    }

    #[test]
    fn balanced_inputs_give_full_entropy() {
        let net = single_neuron_net();
        let data = Dataset::new(
            Tensor::from_vec(&[4, 1], vec![1.0, -1.0, 1.0, -1.0]).unwrap(),
            vec![0, 0, 0, 0],
            2,
            SplitTag::Train,
        )
        .unwrap();
        let rep = probe(&net, &data, 0.0, 0).unwrap();
        let n = &rep.layers[0].neurons[0];
        assert_eq!(n.p_on, 0.5);
        assert_eq!(n.entropy_bits, 1.0);
    }

    #[test]
    fn all_negative_preacts_are_zero_entropy() {
        let net = single_neuron_net();
        let data = Dataset::new(
            Tensor::from_vec(&[3, 1], vec![-1.0, -2.0, -0.5]).unwrap(),
            vec![0, 0, 0],
            2,
            SplitTag::Train,
        )
        .unwrap();
        let rep = probe(&net, &data, 0.0, 0).unwrap();
        assert_eq!(rep.layers[0].neurons[0].entropy_bits, 0.0);
        assert!(rep.layers[0].removable());
    }

    #[test]
    fn conv_aggregates_spatial_positions() {
        // one 2x2 map; weights pick the pixel itself, three positive one negative
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut conv = Layer::new(
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 1,
                kernel: 1,
                stride: 1,
                padding: 0,
            },
            ActivationKind::Relu,
            0.0,
            &mut rng,
        )
        .unwrap();
        conv.weights.data_mut()[0] = 1.0;
        let mut out = Layer::new(
            LayerKind::Dense { input: 4, output: 2 },
            ActivationKind::Identity,
            0.0,
            &mut rng,
        )
        .unwrap();
        for w in out.weights.data_mut() {
            *w = 0.1;
        }
        let net = Network::new(vec![conv, out]);
        let data = Dataset::new(
            Tensor::from_vec(&[2, 1, 2, 2], vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0, 1.0, -2.0]).unwrap(),
            vec![0, 1],
            2,
            SplitTag::Train,
        )
        .unwrap();
        let rep = probe(&net, &data, 0.0, 0).unwrap();
        let n = &rep.layers[0].neurons[0];
        assert_eq!(n.counts.on, 6);
        assert_eq!(n.counts.off, 2);
        assert_eq!(n.p_on, 0.75);
        assert_relative_eq!(n.entropy_bits, 0.811_278, epsilon = 1e-6);
    }

    #[test]
    fn probe_is_permutation_invariant() {
        let net = Network::mlp(&[2, 6, 4, 2], ActivationKind::Relu, 0.2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data: Vec<f32> = (0..32).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
        let d1 = Dataset::new(
            Tensor::from_vec(&[16, 2], data.clone()).unwrap(),
            vec![0; 16],
            2,
            SplitTag::Train,
        )
        .unwrap();
        let perm: Vec<usize> = (0..16).rev().collect();
        let (shuffled, labels) = d1.gather(&perm);
        let d2 = Dataset::new(shuffled, labels, 2, SplitTag::Train).unwrap();
        let r1 = probe(&net, &d1, 0.0, 0).unwrap();
        let r2 = probe(&net, &d2, 0.0, 0).unwrap();
        for (a, b) in r1.layers.iter().zip(r2.layers.iter()) {
            for (x, y) in a.neurons.iter().zip(b.neurons.iter()) {
                assert_eq!(x.counts, y.counts);
            }
        }
    }

    #[test]
    fn csv_headers_are_pinned() {
        assert_eq!(NEURON_CSV_HEADER, "iteration,layer,neuron,n_on,n_off,n_zero,p_on,H");
        assert_eq!(LAYER_CSV_HEADER, "iteration,layer,N_l,H_layer,removable");
    }
}
