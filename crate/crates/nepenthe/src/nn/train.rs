use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::flatten_for;
use super::{ActivationKind, Layer, LayerKind, Network, Tensor};
use crate::error::{Error, Result};
use crate::harness::Dataset;

/// SGD hyperparameters. Milestones are epoch indices at which the learning
/// rate is multiplied by `lr_drop`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub momentum: f32,
    pub weight_decay: f32,
    pub lr_milestones: Vec<usize>,
    pub lr_drop: f32,
    pub rng_seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad lr {}", self.lr)));
        }
        if !self.lr_milestones.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("lr_milestones must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainStats {
    pub epoch_loss: Vec<f64>,
    pub final_loss: f64,
}

struct LayerGrads {
    weights: Vec<f64>,
    bias: Vec<f64>,
    slopes: Option<Vec<f64>>,
}

/// Mean softmax cross-entropy and dL/dz of the output layer.
fn ce_loss_and_delta(logits: &Tensor, labels: &[usize]) -> (f64, Vec<f64>) {
    let n = logits.outer();
    let k = logits.row_len();
    let mut delta = vec![0.0f64; n * k];
    let mut loss = 0.0f64;
    let inv = 1.0 / n as f64;
    for s in 0..n {
        let row = logits.row(s);
        let m = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
        let mut sum = 0.0f64;
        for &v in row {
            sum += (f64::from(v) - m).exp();
        }
        let lse = m + sum.ln();
        loss += (lse - f64::from(row[labels[s]])) * inv;
        for i in 0..k {
            let p = (f64::from(row[i]) - lse).exp();
            delta[s * k + i] = (p - if i == labels[s] { 1.0 } else { 0.0 }) * inv;
        }
    }
    (loss, delta)
}

/// Reverse pass. `delta` enters as dL/dz of the last layer and leaves each
/// stage as dL/dz of the one before it. Gradients accumulate in f64.
fn backward(
    net: &Network,
    acts: &[Tensor],
    preacts: &[Tensor],
    mut delta: Vec<f64>,
) -> Vec<LayerGrads> {
    let mut grads: Vec<LayerGrads> = Vec::with_capacity(net.layers.len());
    for li in (0..net.layers.len()).rev() {
        let layer = &net.layers[li];
        let input = flatten_for(layer, &acts[li]).expect("shapes checked in forward");
        let n = input.outer();
        let (gw, gb, dprev_y) = match layer.kind {
            LayerKind::Dense { input: fin, output } => {
                let mut gw = vec![0.0f64; output * fin];
                let mut gb = vec![0.0f64; output];
                let mut dprev = vec![0.0f64; n * fin];
                for s in 0..n {
                    let x = input.row(s);
                    let d = &delta[s * output..(s + 1) * output];
                    for i in 0..output {
                        let di = d[i];
                        if di == 0.0 {
                            continue;
                        }
                        gb[i] += di;
                        let base = i * fin;
                        for j in 0..fin {
                            gw[base + j] += di * f64::from(x[j]);
                        }
                    }
                    let dp = &mut dprev[s * fin..(s + 1) * fin];
                    for i in 0..output {
                        let di = d[i];
                        if di == 0.0 {
                            continue;
                        }
                        let base = i * fin;
                        for j in 0..fin {
                            dp[j] += di
                                * f64::from(layer.weights.data()[base + j])
                                * f64::from(layer.mask.data()[base + j]);
                        }
                    }
                }
                (gw, gb, dprev)
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let sample = &input.shape()[1..];
                let (h, w) = (sample[1], sample[2]);
                let out_shape = layer.output_shape(sample).expect("checked in forward");
                let (ho, wo) = (out_shape[1], out_shape[2]);
                let wslab = in_channels * kernel * kernel;
                let mut gw = vec![0.0f64; out_channels * wslab];
                let mut gb = vec![0.0f64; out_channels];
                let mut dprev = vec![0.0f64; n * in_channels * h * w];
                let out_row = out_channels * ho * wo;
                for s in 0..n {
                    let x = input.row(s);
                    let d = &delta[s * out_row..(s + 1) * out_row];
                    let dp = &mut dprev[s * in_channels * h * w..(s + 1) * in_channels * h * w];
                    for oc in 0..out_channels {
                        for oy in 0..ho {
                            for ox in 0..wo {
                                let dv = d[(oc * ho + oy) * wo + ox];
                                if dv == 0.0 {
                                    continue;
                                }
                                gb[oc] += dv;
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
                                            let wi = (oc * in_channels + ic) * kernel * kernel
                                                + ky * kernel
                                                + kx;
                                            let xi = (ic * h + (iy - padding)) * w + (ix - padding);
                                            gw[wi] += dv * f64::from(x[xi]);
                                            dp[xi] += dv
                                                * f64::from(layer.weights.data()[wi])
                                                * f64::from(layer.mask.data()[wi]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                (gw, gb, dprev)
            }
        };

        // chain through the previous layer's activation
        let mut gslopes = None;
        if li > 0 {
            let prev = &net.layers[li - 1];
            let z = &preacts[li - 1];
            let positions = z.row_len() / prev.neuron_count();
            let mut next_delta = dprev_y;
            let mut slope_g = prev
                .prelu_slopes
                .as_ref()
                .map(|s| vec![0.0f64; s.len()]);
            for s in 0..n {
                let zr = z.row(s);
                let off = s * zr.len();
                for i in 0..prev.neuron_count() {
                    let slope = prev.slope(i);
                    for p in 0..positions {
                        let idx = i * positions + p;
                        let zv = f64::from(zr[idx]);
                        if let Some(sg) = slope_g.as_mut() {
                            sg[i] += next_delta[off + idx] * prev.activation.slope_derivative(zv);
                        }
                        next_delta[off + idx] *= prev.activation.derivative(zv, slope);
                    }
                }
            }
            // stash slope grads for the previous layer when we get there
            delta = next_delta;
            gslopes = slope_g;
        }

        grads.push(LayerGrads {
            weights: gw,
            bias: gb,
            slopes: None,
        });
        // slope gradients belong to layer li-1; patch them in on the next turn
        if let Some(sg) = gslopes {
            grads.last_mut().unwrap().slopes = Some(sg);
        }
    }
    grads.reverse();
    // grads[i].slopes currently holds slopes of layer i-1; shift down
    let mut shifted: Vec<Option<Vec<f64>>> = vec![None; grads.len()];
    for (i, g) in grads.iter_mut().enumerate() {
        if let Some(sg) = g.slopes.take() {
            shifted[i.saturating_sub(1)] = Some(sg);
        }
    }
    for (g, s) in grads.iter_mut().zip(shifted) {
        g.slopes = s;
    }
    grads
}

/// Momentum SGD on softmax cross-entropy. Masked weights receive no update
/// and are re-zeroed after every step. Deterministic for a fixed seed.
pub fn train(net: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainStats> {
    cfg.validate()?;
    if data.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut vel_w: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
    let mut vel_b: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect();
    let mut vel_s: Vec<Option<Vec<f64>>> = net
        .layers
        .iter()
        .map(|l| l.prelu_slopes.as_ref().map(|s| vec![0.0; s.len()]))
        .collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut lr = f64::from(cfg.lr);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if cfg.lr_milestones.contains(&epoch) {
            lr *= f64::from(cfg.lr_drop);
        }
        order.shuffle(&mut rng);
        let mut sum_loss = 0.0f64;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let (batch, labels) = data.gather(chunk);
            let (acts, preacts) = net.forward_full(&batch)?;
            let (loss, delta) = ce_loss_and_delta(acts.last().unwrap(), &labels);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            sum_loss += loss;
            batches += 1;
            let grads = backward(net, &acts, &preacts, delta);
            let wd = f64::from(cfg.weight_decay);
            let mom = f64::from(cfg.momentum);
            for (li, g) in grads.iter().enumerate() {
                let layer = &mut net.layers[li];
                let vw = &mut vel_w[li];
                for (j, w) in layer.weights.data_mut().iter_mut().enumerate() {
                    let m = f64::from(layer.mask.data()[j]);
                    let grad = (g.weights[j] + wd * f64::from(*w)) * m;
                    vw[j] = mom * vw[j] + grad;
                    *w = (f64::from(*w) - lr * vw[j]) as f32;
                }
                layer.enforce_mask();
                let vb = &mut vel_b[li];
                for (j, b) in layer.bias.data_mut().iter_mut().enumerate() {
                    vb[j] = mom * vb[j] + g.bias[j];
                    *b = (f64::from(*b) - lr * vb[j]) as f32;
                }
                if let (Some(sg), Some(vs), Some(slopes)) =
                    (&g.slopes, vel_s[li].as_mut(), layer.prelu_slopes.as_mut())
                {
                    for (j, a) in slopes.data_mut().iter_mut().enumerate() {
                        vs[j] = mom * vs[j] + sg[j];
                        *a = (f64::from(*a) - lr * vs[j]) as f32;
                    }
                }
            }
        }
        epoch_loss.push(sum_loss / batches.max(1) as f64);
    }
    let final_loss = epoch_loss.last().copied().unwrap_or(0.0);
    Ok(TrainStats {
        epoch_loss,
        final_loss,
    })
}

// ---------------------------------------------------------------------------
// gradient checking against an f64 shadow of the forward pass

struct Shadow {
    layers: Vec<ShadowLayer>,
}

struct ShadowLayer {
    kind: LayerKind,
    activation: ActivationKind,
    w: Vec<f64>,
    b: Vec<f64>,
    m: Vec<f64>,
    slopes: Option<Vec<f64>>,
}

impl Shadow {
    fn of(net: &Network) -> Self {
        Shadow {
            layers: net
                .layers
                .iter()
                .map(|l| ShadowLayer {
                    kind: l.kind,
                    activation: l.activation,
                    w: l.weights.data().iter().map(|&v| f64::from(v)).collect(),
                    b: l.bias.data().iter().map(|&v| f64::from(v)).collect(),
                    m: l.mask.data().iter().map(|&v| f64::from(v)).collect(),
                    slopes: l
                        .prelu_slopes
                        .as_ref()
                        .map(|s| s.data().iter().map(|&v| f64::from(v)).collect()),
                })
                .collect(),
        }
    }

    fn loss(&self, batch: &Tensor, labels: &[usize]) -> f64 {
        let n = batch.outer();
        let mut h: Vec<Vec<f64>> = (0..n)
            .map(|s| batch.row(s).iter().map(|&v| f64::from(v)).collect())
            .collect();
        let mut shape: Vec<usize> = batch.shape()[1..].to_vec();
        for layer in &self.layers {
            let out_shape = shadow_out_shape(layer, &shape);
            let mut next: Vec<Vec<f64>> = Vec::with_capacity(n);
            for x in &h {
                next.push(shadow_layer_forward(layer, x, &shape, &out_shape));
            }
            h = next;
            shape = out_shape;
        }
        let mut loss = 0.0;
        for (s, row) in h.iter().enumerate() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - row[labels[s]];
        }
        loss / n as f64
    }
}

fn shadow_out_shape(layer: &ShadowLayer, input: &[usize]) -> Vec<usize> {
    match layer.kind {
        LayerKind::Dense { output, .. } => vec![output],
        LayerKind::Conv2d {
            out_channels,
            kernel,
            stride,
            padding,
            ..
        } => {
            let ho = (input[1] + 2 * padding - kernel) / stride + 1;
            let wo = (input[2] + 2 * padding - kernel) / stride + 1;
            vec![out_channels, ho, wo]
        }
    }
}

fn shadow_layer_forward(
    layer: &ShadowLayer,
    x: &[f64],
    in_shape: &[usize],
    out_shape: &[usize],
) -> Vec<f64> {
    let z: Vec<f64> = match layer.kind {
        LayerKind::Dense { input: fin, output } => {
            let mut z = vec![0.0; output];
            for i in 0..output {
                let mut acc = layer.b[i];
                for j in 0..fin {
                    acc += layer.w[i * fin + j] * layer.m[i * fin + j] * x[j];
                }
                z[i] = acc;
            }
            z
        }
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            let (h, w) = (in_shape[1], in_shape[2]);
            let (ho, wo) = (out_shape[1], out_shape[2]);
            let mut z = vec![0.0; out_channels * ho * wo];
            for oc in 0..out_channels {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = layer.b[oc];
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
                                    let wi =
                                        (oc * in_channels + ic) * kernel * kernel + ky * kernel + kx;
                                    acc += layer.w[wi]
                                        * layer.m[wi]
                                        * x[(ic * h + (iy - padding)) * w + (ix - padding)];
                                }
                            }
                        }
                        z[(oc * ho + oy) * wo + ox] = acc;
                    }
                }
            }
            z
        }
    };
    let positions = z.len() / layer.b.len();
    z.iter()
        .enumerate()
        .map(|(idx, &v)| {
            let neuron = idx / positions;
            let slope = layer.slopes.as_ref().map(|s| s[neuron]).unwrap_or(0.0);
            layer.activation.apply(v, slope)
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Param {
    Weight(usize, usize),
    Bias(usize, usize),
    Slope(usize, usize),
}

/// Compares the production backward pass against central finite differences
/// of an f64 re-evaluation of the loss, on a seeded parameter subsample.
///
/// Coordinates whose gradient is below 1e-4 of the largest sampled gradient
/// are skipped: they carry no signal at f32 precision.
pub fn grad_check(
    net: &Network,
    batch: &Tensor,
    labels: &[usize],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(Error::Domain(format!("grad_check eps {eps} outside [1e-6, 1e-3]")));
    }
    let (acts, preacts) = net.forward_full(batch)?;
    let (_, delta) = ce_loss_and_delta(acts.last().unwrap(), labels);
    let grads = backward(net, &acts, &preacts, delta);

    let mut coords = Vec::new();
    for (li, layer) in net.layers.iter().enumerate() {
        for j in 0..layer.weights.len() {
            if layer.mask.data()[j] != 0.0 {
                coords.push(Param::Weight(li, j));
            }
        }
        for j in 0..layer.bias.len() {
            coords.push(Param::Bias(li, j));
        }
        if let Some(s) = &layer.prelu_slopes {
            for j in 0..s.len() {
                coords.push(Param::Slope(li, j));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(samples.min(coords.len()));
    if coords.len() <= samples {
        picked.extend_from_slice(&coords);
    } else {
        for _ in 0..samples {
            picked.push(coords[rng.gen_range(0..coords.len())]);
        }
    }

    let analytic = |p: Param| -> f64 {
        match p {
            Param::Weight(li, j) => grads[li].weights[j],
            Param::Bias(li, j) => grads[li].bias[j],
            Param::Slope(li, j) => grads[li].slopes.as_ref().map(|s| s[j]).unwrap_or(0.0),
        }
    };
    let g_max = picked.iter().map(|&p| analytic(p).abs()).fold(0.0, f64::max);
    if g_max == 0.0 {
        return Ok(0.0);
    }

    let mut shadow = Shadow::of(net);
    let mut worst = 0.0f64;
    for &p in &picked {
        let a = analytic(p);
        if a.abs() < 1e-4 * g_max {
            continue;
        }
        let slot: *mut f64 = match p {
            Param::Weight(li, j) => &mut shadow.layers[li].w[j],
            Param::Bias(li, j) => &mut shadow.layers[li].b[j],
            Param::Slope(li, j) => shadow.layers[li].slopes.as_mut().map(|s| &mut s[j]).unwrap(),
        };
        // single-threaded perturb/restore
        let orig = unsafe { *slot };
        unsafe { *slot = orig + eps };
        let lp = shadow.loss(batch, labels);
        unsafe { *slot = orig - eps };
        let lm = shadow.loss(batch, labels);
        unsafe { *slot = orig };
        let numeric = (lp - lm) / (2.0 * eps);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}
