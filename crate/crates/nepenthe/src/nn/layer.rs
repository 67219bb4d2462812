use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActivationKind, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Dense {
        input: usize,
        output: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
}

impl LayerKind {
    pub fn neuron_count(&self) -> usize {
        match *self {
            LayerKind::Dense { output, .. } => output,
            LayerKind::Conv2d { out_channels, .. } => out_channels,
        }
    }

    /// Weights owned by a single neuron (dense row / conv filter).
    pub fn weights_per_neuron(&self) -> usize {
        match *self {
            LayerKind::Dense { input, .. } => input,
            LayerKind::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights_per_neuron()
    }

    fn weight_shape(&self) -> Vec<usize> {
        match *self {
            LayerKind::Dense { input, output } => vec![output, input],
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![out_channels, in_channels, kernel, kernel],
        }
    }
}

/// One affine/conv stage with a binary prune mask congruent to its weights.
///
/// The effective weight is always `weights ⊙ mask`; a masked weight stays
/// exactly zero through training because its gradient is masked too.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    pub weights: Tensor,
    pub bias: Tensor,
    pub mask: Tensor,
    pub activation: ActivationKind,
    /// Learned per-neuron slopes, present iff `activation` is `Prelu`.
    pub prelu_slopes: Option<Tensor>,
}

impl Layer {
    /// Kaiming-uniform fan-in weights, constant bias.
    pub fn new(kind: LayerKind, activation: ActivationKind, bias_init: f32, rng: &mut ChaCha8Rng) -> Result<Self> {
        activation.validate()?;
        let ws = kind.weight_shape();
        let fan_in = kind.fan_in() as f64;
        let bound = (6.0 / fan_in).sqrt() as f32;
        let n: usize = ws.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(rng.gen_range(-bound..bound));
        }
        let weights = Tensor::from_vec(&ws, data)?;
        let neurons = kind.neuron_count();
        let bias = Tensor::from_vec(&[neurons], vec![bias_init; neurons])?;
        let mask = Tensor::ones(&ws);
        let prelu_slopes = match activation {
            ActivationKind::Prelu { init_slope } => {
                Some(Tensor::from_vec(&[neurons], vec![init_slope; neurons])?)
            }
            _ => None,
        };
        Ok(Layer {
            kind,
            weights,
            bias,
            mask,
            activation,
            prelu_slopes,
        })
    }

    pub fn neuron_count(&self) -> usize {
        self.kind.neuron_count()
    }

    /// Slice of a neuron's weights (and congruent mask slice).
    pub fn neuron_weights(&self, i: usize) -> (&[f32], &[f32]) {
        let w = self.kind.weights_per_neuron();
        (
            &self.weights.data()[i * w..(i + 1) * w],
            &self.mask.data()[i * w..(i + 1) * w],
        )
    }

    pub fn unpruned_count(&self) -> usize {
        self.mask.data().iter().filter(|&&m| m != 0.0).count()
    }

    pub fn slope(&self, neuron: usize) -> f64 {
        self.prelu_slopes
            .as_ref()
            .map(|s| f64::from(s.data()[neuron]))
            .unwrap_or(0.0)
    }

    /// Output shape for one sample given the input shape (without batch dim).
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self.kind {
            LayerKind::Dense { input: fin, output } => {
                let flat: usize = input.iter().product();
                if flat != fin {
                    return Err(Error::ShapeMismatch {
                        context: "dense input".into(),
                        expected: format!("{fin} features"),
                        actual: format!("{flat} features (shape {input:?})"),
                    });
                }
                Ok(vec![output])
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                if input.len() != 3 || input[0] != in_channels {
                    return Err(Error::ShapeMismatch {
                        context: "conv input".into(),
                        expected: format!("[{in_channels}, H, W]"),
                        actual: format!("{input:?}"),
                    });
                }
                let (h, w) = (input[1], input[2]);
                if h + 2 * padding < kernel || w + 2 * padding < kernel {
                    return Err(Error::ShapeMismatch {
                        context: "conv kernel".into(),
                        expected: format!("spatial dims >= kernel {kernel}"),
                        actual: format!("{h}x{w} with padding {padding}"),
                    });
                }
                let ho = (h + 2 * padding - kernel) / stride + 1;
                let wo = (w + 2 * padding - kernel) / stride + 1;
                Ok(vec![out_channels, ho, wo])
            }
        }
    }

    /// Pre-activations for a batch; `input` is `[N, ...]`, output `[N, out...]`.
    /// Accumulates in f64 and rounds once per output element.
    pub fn preactivations(&self, input: &Tensor) -> Result<Tensor> {
        let n = input.outer();
        let sample_shape = &input.shape()[1..];
        let out_shape = self.output_shape(sample_shape)?;
        let mut full_shape = vec![n];
        full_shape.extend_from_slice(&out_shape);
        let mut out = Tensor::zeros(&full_shape);

        match self.kind {
            LayerKind::Dense { input: fin, output } => {
                for s in 0..n {
                    let x = input.row(s);
                    let o = out.row_mut(s);
                    for i in 0..output {
                        let (w, m) = (
                            &self.weights.data()[i * fin..(i + 1) * fin],
                            &self.mask.data()[i * fin..(i + 1) * fin],
                        );
                        let mut acc = f64::from(self.bias.data()[i]);
                        for j in 0..fin {
                            acc += f64::from(w[j]) * f64::from(m[j]) * f64::from(x[j]);
                        }
                        o[i] = acc as f32;
                    }
                }
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let (h, w) = (sample_shape[1], sample_shape[2]);
                let (ho, wo) = (out_shape[1], out_shape[2]);
                let wslab = in_channels * kernel * kernel;
                for s in 0..n {
                    let x = input.row(s);
                    let o = out.row_mut(s);
                    for oc in 0..out_channels {
                        let wf = &self.weights.data()[oc * wslab..(oc + 1) * wslab];
                        let mf = &self.mask.data()[oc * wslab..(oc + 1) * wslab];
                        let b = f64::from(self.bias.data()[oc]);
                        for oy in 0..ho {
                            for ox in 0..wo {
                                let mut acc = b;
                                for ic in 0..in_channels {
                                    for ky in 0..kernel {
                                        let iy = oy * stride + ky;
                                        if iy < padding || iy - padding >= h {
                                            continue;
                                        }
                                        for kx in 0..kernel {
                                            let ix = ox * stride + kx;
                                            if ix < padding || ix - padding >= w {
                                                continue;
                                            }
                                            let wi = (ic * kernel + ky) * kernel + kx;
                                            let xi = (ic * h + (iy - padding)) * w + (ix - padding);
                                            acc += f64::from(wf[wi])
                                                * f64::from(mf[wi])
                                                * f64::from(x[xi]);
                                        }
                                    }
                                }
                                o[(oc * ho + oy) * wo + ox] = acc as f32;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Apply ψ elementwise to pre-activations.
    pub fn activate(&self, preact: &Tensor) -> Tensor {
        let mut out = preact.clone();
        let per_neuron_positions = match self.kind {
            LayerKind::Dense { .. } => 1,
            LayerKind::Conv2d { .. } => {
                let rl = preact.row_len();
                rl / self.neuron_count()
            }
        };
        let neurons = self.neuron_count();
        for s in 0..out.outer() {
            let row = out.row_mut(s);
            for i in 0..neurons {
                let slope = self.slope(i);
                for p in 0..per_neuron_positions {
                    let idx = i * per_neuron_positions + p;
                    row[idx] = self.activation.apply(f64::from(row[idx]), slope) as f32;
                }
            }
        }
        out
    }

    /// Re-apply the mask so masked weights are stored as exact zeros.
    pub fn enforce_mask(&mut self) {
        let mask = self.mask.data().to_vec();
        for (w, m) in self.weights.data_mut().iter_mut().zip(mask) {
            if m == 0.0 {
                *w = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn dense_forward_hand_case() {
        // w=[1,1], b=0, input [3,-5] -> z=-2, relu -> 0
        let mut l = Layer::new(
            LayerKind::Dense { input: 2, output: 1 },
            ActivationKind::Relu,
            0.0,
            &mut rng(),
        )
        .unwrap();
        l.weights = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap();
        let x = Tensor::from_vec(&[1, 2], vec![3.0, -5.0]).unwrap();
        let z = l.preactivations(&x).unwrap();
        assert_eq!(z.data(), &[-2.0]);
        assert_eq!(l.activate(&z).data(), &[0.0]);
    }

    #[test]
    fn identity_activation_passes_preacts() {
        let l = Layer::new(
            LayerKind::Dense { input: 3, output: 4 },
            ActivationKind::Identity,
            0.0,
            &mut rng(),
        )
        .unwrap();
        let x = Tensor::from_vec(&[2, 3], vec![0.5, -1.0, 2.0, 0.0, 3.0, -0.25]).unwrap();
        let z = l.preactivations(&x).unwrap();
        assert_eq!(l.activate(&z).data(), z.data());
    }

    #[test]
    fn conv_output_shape() {
        let l = Layer::new(
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel: 3,
                stride: 2,
                padding: 1,
            },
            ActivationKind::Relu,
            0.0,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(l.output_shape(&[1, 8, 8]).unwrap(), vec![2, 4, 4]);
    }

    #[test]
    fn conv_identity_kernel_recovers_input() {
        // 1x1 dirac kernel at center of a 3x3, stride 1, pad 1
        let mut l = Layer::new(
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 1,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            ActivationKind::Identity,
            0.0,
            &mut rng(),
        )
        .unwrap();
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        l.weights = Tensor::from_vec(&[1, 1, 3, 3], w).unwrap();
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let z = l.preactivations(&x).unwrap();
        assert_eq!(z.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn masked_weights_do_not_contribute() {
        let mut l = Layer::new(
            LayerKind::Dense { input: 2, output: 1 },
            ActivationKind::Identity,
            0.0,
            &mut rng(),
        )
        .unwrap();
        l.weights = Tensor::from_vec(&[1, 2], vec![10.0, 1.0]).unwrap();
        l.mask = Tensor::from_vec(&[1, 2], vec![0.0, 1.0]).unwrap();
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap();
        assert_eq!(l.preactivations(&x).unwrap().data(), &[1.0]);
    }
}
