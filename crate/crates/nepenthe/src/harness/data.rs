use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

/// Labeled inputs. `inputs` is `[N, features]` or `[N, C, H, W]`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub split: SplitTag,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>, classes: usize, split: SplitTag) -> Result<Self> {
        if inputs.outer() == 0 {
            return Err(Error::EmptyDataset);
        }
        if inputs.outer() != labels.len() {
            return Err(Error::ShapeMismatch {
                context: "dataset".into(),
                expected: format!("{} labels", inputs.outer()),
                actual: format!("{}", labels.len()),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Dataset {
            inputs,
            labels,
            classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Assemble a batch from sample indices, preserving their order.
    pub fn gather(&self, idx: &[usize]) -> (Tensor, Vec<usize>) {
        let row = self.inputs.row_len();
        let mut data = Vec::with_capacity(idx.len() * row);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(self.inputs.row(i));
            labels.push(self.labels[i]);
        }
        let mut shape = vec![idx.len()];
        shape.extend_from_slice(&self.inputs.shape()[1..]);
        (Tensor::from_vec(&shape, data).expect("congruent"), labels)
    }

    /// Sequential fixed-order batches.
    pub fn batches(&self, batch_size: usize) -> impl Iterator<Item = (Tensor, Vec<usize>)> + '_ {
        let n = self.len();
        let idx: Vec<usize> = (0..n).collect();
        (0..n.div_ceil(batch_size)).map(move |b| {
            let lo = b * batch_size;
            let hi = (lo + batch_size).min(n);
            self.gather(&idx[lo..hi])
        })
    }

    /// Disjoint train/val/test split by seeded shuffle.
    pub fn split(&self, val_frac: f64, test_frac: f64, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
        let n = self.len();
        let n_val = ((n as f64) * val_frac).round() as usize;
        let n_test = ((n as f64) * test_frac).round() as usize;
        if n_val + n_test >= n {
            return Err(Error::InvalidConfig("split fractions leave no training data".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (test_idx, rest) = order.split_at(n_test);
        let (val_idx, train_idx) = rest.split_at(n_val);
        let make = |idx: &[usize], tag| {
            let (inputs, labels) = self.gather(idx);
            Dataset::new(inputs, labels, self.classes, tag)
        };
        Ok((
            make(train_idx, SplitTag::Train)?,
            make(val_idx, SplitTag::Val)?,
            make(test_idx, SplitTag::Test)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Blobs,
    Moons,
    Rings,
}

/// Two-class 2-D toy datasets: balanced, standardized per feature,
/// deterministic for a fixed seed.
pub fn gen_synthetic(kind: SyntheticKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::InvalidConfig(format!("need n >= 4 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut xs: Vec<f64> = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    match kind {
        SyntheticKind::Blobs => {
            // far-separated clusters: states of downstream rectifier units
            // stay bimodal, which the depth-reduction loop relies on
            const CENTER: f64 = 3.0;
            for i in 0..n {
                let c = if i < half { -CENTER } else { CENTER };
                xs.push(c + noise * normal());
                xs.push(c + noise * normal());
                labels.push(usize::from(i >= half));
            }
        }
        SyntheticKind::Moons => {
            for i in 0..n {
                let inner = i >= half;
                let m = if inner { n - half } else { half };
                let j = if inner { i - half } else { i };
                let t = std::f64::consts::PI * j as f64 / (m.max(2) - 1) as f64;
                let (x, y) = if inner {
                    (1.0 - t.cos(), 0.5 - t.sin())
                } else {
                    (t.cos(), t.sin())
                };
                xs.push(x + noise * normal());
                xs.push(y + noise * normal());
                labels.push(usize::from(inner));
            }
        }
        SyntheticKind::Rings => {
            for i in 0..n {
                let outer = i >= half;
                let m = if outer { n - half } else { half };
                let j = if outer { i - half } else { i };
                let r = if outer { 2.2 } else { 1.0 };
                let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                xs.push(r * theta.cos() + noise * normal());
                xs.push(r * theta.sin() + noise * normal());
                labels.push(usize::from(outer));
            }
        }
    }

    standardize_columns(&mut xs, 2);
    let inputs = Tensor::from_vec(&[n, 2], xs.iter().map(|&v| v as f32).collect())?;
    Dataset::new(inputs, labels, 2, SplitTag::Train)
}

fn standardize_columns(xs: &mut [f64], cols: usize) {
    let n = xs.len() / cols;
    for c in 0..cols {
        let mut mean = 0.0;
        for r in 0..n {
            mean += xs[r * cols + c];
        }
        mean /= n as f64;
        let mut var = 0.0;
        for r in 0..n {
            let d = xs[r * cols + c] - mean;
            var += d * d;
        }
        let sd = (var / n as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for r in 0..n {
            xs[r * cols + c] = (xs[r * cols + c] - mean) / sd;
        }
    }
}
