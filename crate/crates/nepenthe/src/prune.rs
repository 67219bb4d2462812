//! Unstructured pruning: the entropy-weighted iterative method and the
//! global magnitude baseline.
//!
//! Per iteration the entropy-weighted method removes a fixed fraction of the
//! remaining prunable weights, split across layers by a softmax over each
//! layer's pruning relevance. Candidates are restricted to neurons with
//! non-zero entropy, so saturated neurons keep their weights.

use serde::{Deserialize, Serialize};

use crate::entropy::{probe, EntropyReport, LayerEntropy};
use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::nn::{train, Network, TrainConfig, TrainStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMethod {
    Nepenthe,
    Imp,
}

impl PruneMethod {
    pub fn name(&self) -> &'static str {
        match self {
            PruneMethod::Nepenthe => "nepenthe",
            PruneMethod::Imp => "imp",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Fraction of the remaining prunable weights removed per iteration.
    pub zeta: f64,
    /// Relative validation-accuracy threshold for continuing.
    pub theta: f64,
    pub max_iterations: usize,
    pub method: PruneMethod,
    /// Drop layers with zero relevance from the softmax denominator.
    pub exclude_zero_entropy_layers: bool,
    /// State threshold forwarded to the entropy probe.
    pub eps_state: f32,
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::InvalidConfig(format!("zeta must be in (0,1), got {}", self.zeta)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("theta must be in (0,1], got {}", self.theta)));
        }
        Ok(())
    }
}

/// Per-layer budget line: scores, capacity, and the final integer quota.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerBudget {
    pub layer_index: usize,
    pub irrelevance: f64,
    pub relevance: f64,
    pub capacity: usize,
    pub quota: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneBudget {
    pub total: usize,
    pub layers: Vec<LayerBudget>,
}

/// Mean over neurons of entropy × mean |w| of the neuron's unpruned weights.
/// Zero-entropy neurons and fully pruned neurons contribute nothing.
pub fn irrelevance(layer: &crate::nn::Layer, report: &LayerEntropy) -> f64 {
    let neurons = layer.neuron_count();
    let mut total = 0.0f64;
    for i in 0..neurons {
        let h = report.neurons[i].entropy_bits;
        if h == 0.0 {
            continue;
        }
        let (w, m) = layer.neuron_weights(i);
        let mut sum = 0.0f64;
        let mut cnt = 0usize;
        for (wv, mv) in w.iter().zip(m) {
            if *mv != 0.0 {
                sum += f64::from(wv.abs());
                cnt += 1;
            }
        }
        if cnt > 0 {
            total += h * (sum / cnt as f64);
        }
    }
    total / neurons as f64
}

/// R_l = (Σ_j I_j) / I_l for non-zero irrelevance, zero otherwise.
pub fn relevance(irrelevances: &[f64]) -> Vec<f64> {
    let sum: f64 = irrelevances.iter().sum();
    irrelevances
        .iter()
        .map(|&i| if i != 0.0 { sum / i } else { 0.0 })
        .collect()
}

/// Softmax-weighted integer split of `total` across layers, capped by each
/// layer's capacity. Largest-remainder rounding keeps the sum exact; clipped
/// surplus is redistributed over layers with free capacity using the same
/// softmax weights.
pub fn allocate(
    relevances: &[f64],
    capacities: &[usize],
    total: usize,
    exclude_zero: bool,
) -> Result<Vec<usize>> {
    assert_eq!(relevances.len(), capacities.len());
    let global: usize = capacities.iter().sum();
    if total > global {
        return Err(Error::BudgetExceedsCapacity { total, capacity: global });
    }
    let n = relevances.len();
    let included: Vec<bool> = relevances
        .iter()
        .map(|&r| !(exclude_zero && r == 0.0))
        .collect();
    let shares = softmax_masked(relevances, &included);

    let mut quotas = largest_remainder(&shares, total);
    // clip to capacity and push the surplus to layers that can still take it
    loop {
        let mut surplus = 0usize;
        for i in 0..n {
            if quotas[i] > capacities[i] {
                surplus += quotas[i] - capacities[i];
                quotas[i] = capacities[i];
            }
        }
        if surplus == 0 {
            break;
        }
        let open: Vec<bool> = (0..n).map(|i| quotas[i] < capacities[i]).collect();
        if !open.iter().any(|&o| o) {
            break;
        }
        let w = softmax_masked(relevances, &open);
        let add = largest_remainder(&w, surplus);
        for i in 0..n {
            quotas[i] += add[i];
        }
    }
    Ok(quotas)
}

fn softmax_masked(values: &[f64], included: &[bool]) -> Vec<f64> {
    let max = values
        .iter()
        .zip(included)
        .filter(|(_, &inc)| inc)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; values.len()];
    }
    let exps: Vec<f64> = values
        .iter()
        .zip(included)
        .map(|(&v, &inc)| if inc { (v - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Integer apportionment: floors plus leftover units to the largest
/// fractional parts; ties go to the lower index.
fn largest_remainder(shares: &[f64], total: usize) -> Vec<usize> {
    let real: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut out: Vec<usize> = real.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = real[a] - real[a].floor();
        let fb = real[b] - real[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

/// Unpruned weights sitting in neurons with non-zero entropy.
pub fn layer_capacity(layer: &crate::nn::Layer, report: &LayerEntropy) -> usize {
    (0..layer.neuron_count())
        .filter(|&i| report.neurons[i].entropy_bits > 0.0)
        .map(|i| {
            let (_, m) = layer.neuron_weights(i);
            m.iter().filter(|&&v| v != 0.0).count()
        })
        .sum()
}

/// Compute the full budget for one iteration. `total` is capped at the
/// global capacity by the caller.
pub fn compute_budget(
    net: &Network,
    report: &EntropyReport,
    total: usize,
    exclude_zero: bool,
) -> Result<PruneBudget> {
    let prunable = net.prunable();
    let mut irr = Vec::with_capacity(prunable.len());
    let mut caps = Vec::with_capacity(prunable.len());
    for &li in &prunable {
        let lr = report
            .layer(li)
            .ok_or_else(|| Error::Domain(format!("entropy report missing layer {li}")))?;
        irr.push(irrelevance(&net.layers[li], lr));
        caps.push(layer_capacity(&net.layers[li], lr));
    }
    let rel = relevance(&irr);
    let quotas = allocate(&rel, &caps, total, exclude_zero)?;
    Ok(PruneBudget {
        total,
        layers: prunable
            .iter()
            .enumerate()
            .map(|(k, &li)| LayerBudget {
                layer_index: li,
                irrelevance: irr[k],
                relevance: rel[k],
                capacity: caps[k],
                quota: quotas[k],
            })
            .collect(),
    })
}

/// Mask the quota-many smallest-magnitude unpruned weights of each layer,
/// drawn only from neurons with non-zero entropy. Ties break on
/// (neuron index, weight index) ascending.
pub fn prune_step(net: &mut Network, report: &EntropyReport, budget: &PruneBudget) -> Result<usize> {
    let mut masked = 0usize;
    for lb in &budget.layers {
        if lb.quota == 0 {
            continue;
        }
        let layer = &mut net.layers[lb.layer_index];
        let lr = report
            .layer(lb.layer_index)
            .ok_or_else(|| Error::Domain(format!("entropy report missing layer {}", lb.layer_index)))?;
        let per = layer.kind.weights_per_neuron();
        let mut candidates: Vec<(f32, usize, usize)> = Vec::new();
        for i in 0..layer.neuron_count() {
            if lr.neurons[i].entropy_bits == 0.0 {
                continue;
            }
            for j in 0..per {
                let idx = i * per + j;
                if layer.mask.data()[idx] != 0.0 {
                    candidates.push((layer.weights.data()[idx].abs(), i, j));
                }
            }
        }
        if lb.quota > candidates.len() {
            return Err(Error::BudgetExceedsCapacity {
                total: lb.quota,
                capacity: candidates.len(),
            });
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for &(_, i, j) in candidates.iter().take(lb.quota) {
            layer.mask.data_mut()[i * per + j] = 0.0;
            masked += 1;
        }
        layer.enforce_mask();
    }
    Ok(masked)
}

/// Global magnitude baseline: mask the ζ-fraction smallest-|w| unpruned
/// weights pooled across all prunable layers. No entropy weighting, no
/// neuron filtering.
pub fn imp_step(net: &mut Network, zeta: f64) -> usize {
    let prunable = net.prunable();
    let mut candidates: Vec<(f32, usize, usize)> = Vec::new();
    for &li in &prunable {
        let layer = &net.layers[li];
        for (idx, (&w, &m)) in layer.weights.data().iter().zip(layer.mask.data()).enumerate() {
            if m != 0.0 {
                candidates.push((w.abs(), li, idx));
            }
        }
    }
    let remove = (zeta * candidates.len() as f64).floor() as usize;
    if remove == 0 {
        return 0;
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(_, li, idx) in candidates.iter().take(remove) {
        net.layers[li].mask.data_mut()[idx] = 0.0;
    }
    for &li in &prunable {
        net.layers[li].enforce_mask();
    }
    remove
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AccuracyFloor,
    MaxIterations,
    Saturated,
}

/// One pruning iteration's bookkeeping. `report` reflects the model after
/// this iteration's retraining (iteration 0 is the dense model).
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iteration: usize,
    pub report: EntropyReport,
    pub accuracy: f64,
    pub unpruned: usize,
    pub budget: Option<PruneBudget>,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct PruneRun {
    pub method: PruneMethod,
    pub final_net: Network,
    pub dense_accuracy: f64,
    pub trace: Vec<IterationTrace>,
    pub stop: StopReason,
    pub retrain_stats: Vec<TrainStats>,
}

impl PruneRun {
    /// Trace entry of the returned model.
    pub fn accepted_iteration(&self) -> &IterationTrace {
        self.trace
            .iter()
            .rev()
            .find(|t| t.accepted)
            .expect("dense entry is always accepted")
    }
}

/// The entropy-weighted iterative loop.
///
/// Assumes `net` is already trained; evaluates it on `val` to fix the dense
/// accuracy, then repeats (probe → budget → prune → retrain → evaluate)
/// while validation accuracy stays strictly above `theta × dense` and the
/// iteration cap is not reached. Returns the last iterate that satisfied
/// the threshold.
pub fn nepenthe_loop(
    net: &Network,
    train_data: &Dataset,
    val_data: &Dataset,
    retrain_cfg: &TrainConfig,
    cfg: &PruneConfig,
) -> Result<PruneRun> {
    run_loop(net, train_data, val_data, retrain_cfg, cfg, PruneMethod::Nepenthe)
}

/// The global magnitude baseline, run for a fixed number of iterations
/// (no accuracy stop, matching its use as a trend baseline).
pub fn imp_loop(
    net: &Network,
    train_data: &Dataset,
    val_data: &Dataset,
    retrain_cfg: &TrainConfig,
    cfg: &PruneConfig,
) -> Result<PruneRun> {
    run_loop(net, train_data, val_data, retrain_cfg, cfg, PruneMethod::Imp)
}

fn run_loop(
    net: &Network,
    train_data: &Dataset,
    val_data: &Dataset,
    retrain_cfg: &TrainConfig,
    cfg: &PruneConfig,
    method: PruneMethod,
) -> Result<PruneRun> {
    cfg.validate()?;
    let mut current = net.clone();
    let dense_accuracy = current.evaluate(val_data)?;
    let floor = cfg.theta * dense_accuracy;

    let mut trace = vec![IterationTrace {
        iteration: 0,
        report: probe(&current, train_data, cfg.eps_state, 0)?,
        accuracy: dense_accuracy,
        unpruned: current.unpruned_in_prunable(),
        budget: None,
        accepted: true,
    }];
    let mut accepted_net = current.clone();
    let mut retrain_stats = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for iteration in 1..=cfg.max_iterations {
        if !(trace.last().unwrap().accuracy > floor) {
            stop = StopReason::AccuracyFloor;
            break;
        }
        let report = trace.last().unwrap().report.clone();
        let budget = match method {
            PruneMethod::Nepenthe => {
                let unpruned = current.unpruned_in_prunable();
                let want = (cfg.zeta * unpruned as f64).floor() as usize;
                let capacity: usize = current
                    .prunable()
                    .iter()
                    .map(|&li| layer_capacity(&current.layers[li], report.layer(li).unwrap()))
                    .sum();
                let total = want.min(capacity);
                if total == 0 {
                    stop = StopReason::Saturated;
                    break;
                }
                let budget = compute_budget(&current, &report, total, cfg.exclude_zero_entropy_layers)?;
                prune_step(&mut current, &report, &budget)?;
                Some(budget)
            }
            PruneMethod::Imp => {
                if imp_step(&mut current, cfg.zeta) == 0 {
                    stop = StopReason::Saturated;
                    break;
                }
                None
            }
        };

        let mut rc = retrain_cfg.clone();
        rc.rng_seed = retrain_cfg.rng_seed.wrapping_add(iteration as u64);
        retrain_stats.push(train(&mut current, train_data, &rc)?);

        let accuracy = current.evaluate(val_data)?;
        let accepted = match method {
            PruneMethod::Nepenthe => accuracy > floor,
            PruneMethod::Imp => true,
        };
        trace.push(IterationTrace {
            iteration,
            report: probe(&current, train_data, cfg.eps_state, iteration)?,
            accuracy,
            unpruned: current.unpruned_in_prunable(),
            budget,
            accepted,
        });
        if accepted {
            accepted_net = current.clone();
        }
    }
    if matches!(method, PruneMethod::Nepenthe)
        && stop == StopReason::MaxIterations
        && !(trace.last().unwrap().accuracy > floor)
    {
        stop = StopReason::AccuracyFloor;
    }

    Ok(PruneRun {
        method,
        final_net: match method {
            PruneMethod::Nepenthe => accepted_net,
            PruneMethod::Imp => current,
        },
        dense_accuracy,
        trace,
        stop,
        retrain_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{NeuronEntropy, StateCounts};
    use crate::harness::SplitTag;
    use crate::nn::{ActivationKind, Layer, LayerKind, Tensor};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer_report(layer_index: usize, entropies: &[f64]) -> LayerEntropy {
        LayerEntropy {
            layer_index,
            neurons: entropies
                .iter()
                .map(|&h| NeuronEntropy {
                    counts: StateCounts { on: 1, off: 1, zero: 0 },
                    p_on: 0.5,
                    entropy_bits: h,
                })
                .collect(),
            mean_entropy: entropies.iter().sum::<f64>() / entropies.len() as f64,
        }
    }

    fn dense_layer(weights: &[f32], out: usize, act: ActivationKind) -> Layer {
        let fin = weights.len() / out;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = Layer::new(LayerKind::Dense { input: fin, output: out }, act, 0.0, &mut rng).unwrap();
        l.weights = Tensor::from_vec(&[out, fin], weights.to_vec()).unwrap();
        l.mask = Tensor::ones(&[out, fin]);
        l
    }

    #[test]
    fn irrelevance_hand_cases() {
        let l = dense_layer(&[1.0, -1.0], 1, ActivationKind::Relu);
        assert_eq!(irrelevance(&l, &layer_report(0, &[1.0])), 1.0);

        let l = dense_layer(&[0.1, 0.3, 0.2, 0.6], 2, ActivationKind::Relu);
        // mean |w| per neuron: 0.2 and 0.4; H = 1, 0.5
        let r = layer_report(0, &[1.0, 0.5]);
        assert_relative_eq!(irrelevance(&l, &r), 0.2, epsilon = 1e-12);

        let r = layer_report(0, &[0.0, 0.0]);
        assert_eq!(irrelevance(&l, &r), 0.0);
    }

    #[test]
    fn relevance_hand_cases() {
        assert_eq!(relevance(&[1.0, 2.0, 3.0]), vec![6.0, 3.0, 2.0]);
        assert_eq!(relevance(&[0.0, 2.0]), vec![0.0, 1.0]);
        assert_eq!(relevance(&[2.0]), vec![1.0]);
    }

    #[test]
    fn allocate_softmax_example() {
        let q = allocate(&[3.0, 1.5], &[1000, 1000], 100, false).unwrap();
        assert_eq!(q, vec![82, 18]);
    }

    #[test]
    fn allocate_equal_relevance_splits_evenly() {
        let q = allocate(&[2.0, 2.0, 2.0, 2.0], &[100, 100, 100, 100], 80, false).unwrap();
        assert_eq!(q, vec![20, 20, 20, 20]);
    }

    #[test]
    fn allocate_single_layer_takes_all() {
        assert_eq!(allocate(&[5.0], &[50], 42, false).unwrap(), vec![42]);
    }

    #[test]
    fn allocate_clips_and_redistributes() {
        // heavy layer capped at 10; the rest must land on the other layer
        let q = allocate(&[50.0, 1.0], &[10, 100], 60, false).unwrap();
        assert_eq!(q.iter().sum::<usize>(), 60);
        assert_eq!(q[0], 10);
        assert_eq!(q[1], 50);
    }

    #[test]
    fn allocate_rejects_over_capacity() {
        assert!(matches!(
            allocate(&[1.0, 1.0], &[5, 5], 11, false),
            Err(Error::BudgetExceedsCapacity { .. })
        ));
    }

    #[test]
    fn prune_step_masks_smallest_in_mixed_neurons() {
        let layer = dense_layer(&[0.5, 0.1, 0.3], 1, ActivationKind::Relu);
        let out = dense_layer(&[1.0], 1, ActivationKind::Identity);
        let mut net = Network::new(vec![layer, out]);
        let report = EntropyReport {
            iteration: 0,
            layers: vec![layer_report(0, &[0.9])],
        };
        let budget = PruneBudget {
            total: 2,
            layers: vec![LayerBudget {
                layer_index: 0,
                irrelevance: 1.0,
                relevance: 1.0,
                capacity: 3,
                quota: 2,
            }],
        };
        prune_step(&mut net, &report, &budget).unwrap();
        assert_eq!(net.layers[0].mask.data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_entropy_neurons_keep_their_weights() {
        let layer = dense_layer(&[0.001, 0.002, 9.0, 8.0], 2, ActivationKind::Relu);
        let out = dense_layer(&[1.0, 1.0], 1, ActivationKind::Identity);
        let mut net = Network::new(vec![layer, out]);
        // neuron 0 has zero entropy: its tiny weights must survive
        let report = EntropyReport {
            iteration: 0,
            layers: vec![layer_report(0, &[0.0, 0.8])],
        };
        let budget = compute_budget(&net, &report, 2, false).unwrap();
        prune_step(&mut net, &report, &budget).unwrap();
        assert_eq!(&net.layers[0].mask.data()[..2], &[1.0, 1.0]);
        assert_eq!(&net.layers[0].mask.data()[2..], &[0.0, 0.0]);
    }

    #[test]
    fn quota_zero_changes_nothing() {
        let layer = dense_layer(&[0.5, 0.1], 1, ActivationKind::Relu);
        let out = dense_layer(&[1.0], 1, ActivationKind::Identity);
        let mut net = Network::new(vec![layer, out]);
        let report = EntropyReport {
            iteration: 0,
            layers: vec![layer_report(0, &[0.9])],
        };
        let budget = PruneBudget {
            total: 0,
            layers: vec![LayerBudget {
                layer_index: 0,
                irrelevance: 1.0,
                relevance: 1.0,
                capacity: 2,
                quota: 0,
            }],
        };
        prune_step(&mut net, &report, &budget).unwrap();
        assert_eq!(net.layers[0].mask.data(), &[1.0, 1.0]);
    }

    #[test]
    fn imp_step_is_global_smallest() {
        let l0 = dense_layer(&[0.9, 0.2], 1, ActivationKind::Relu);
        let l1 = dense_layer(&[0.1, 0.8], 1, ActivationKind::Relu);
        let out = dense_layer(&[1.0], 1, ActivationKind::Identity);
        let mut net = Network::new(vec![l0, l1, out]);
        let removed = imp_step(&mut net, 0.5);
        assert_eq!(removed, 2);
        assert_eq!(net.layers[0].mask.data(), &[1.0, 0.0]);
        assert_eq!(net.layers[1].mask.data(), &[0.0, 1.0]);
    }

    #[test]
    fn imp_rounds_down_to_zero() {
        let l0 = dense_layer(&[0.9], 1, ActivationKind::Relu);
        let out = dense_layer(&[1.0], 1, ActivationKind::Identity);
        let mut net = Network::new(vec![l0, out]);
        assert_eq!(imp_step(&mut net, 0.5), 0);
        assert_eq!(net.layers[0].mask.data(), &[1.0]);
    }

    #[test]
    fn imp_halves_remaining_each_time() {
        let mut net = Network::mlp(&[4, 32, 32, 2], ActivationKind::Relu, 0.0, 3).unwrap();
        let mut remaining = net.unpruned_in_prunable();
        for _ in 0..4 {
            let removed = imp_step(&mut net, 0.5);
            let expect = (0.5 * remaining as f64).floor() as usize;
            assert_eq!(removed, expect);
            remaining -= removed;
            assert_eq!(net.unpruned_in_prunable(), remaining);
        }
    }

    #[test]
    fn impossible_threshold_returns_dense_net() {
        let data = crate::harness::gen_synthetic(crate::harness::SyntheticKind::Blobs, 64, 0.1, 1).unwrap();
        let net = Network::mlp(&[2, 8, 2], ActivationKind::Relu, 0.5, 2).unwrap();
        let rc = TrainConfig {
            epochs: 2,
            batch_size: 16,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_milestones: vec![],
            lr_drop: 0.1,
            rng_seed: 3,
        };
        let cfg = PruneConfig {
            zeta: 0.5,
            theta: 1.0,
            max_iterations: 7,
            method: PruneMethod::Nepenthe,
            exclude_zero_entropy_layers: false,
            eps_state: 0.0,
        };
        // theta=1.0 means "strictly better than dense", unattainable
        let run = nepenthe_loop(&net, &data, &data, &rc, &cfg).unwrap();
        assert_eq!(run.stop, StopReason::AccuracyFloor);
        assert_eq!(run.trace.len(), 1);
        for (a, b) in run.final_net.layers.iter().zip(net.layers.iter()) {
            assert_eq!(a.weights.data(), b.weights.data());
        }
    }

    #[test]
    fn unpruned_count_is_monotone_in_trace() {
        let data = crate::harness::gen_synthetic(crate::harness::SyntheticKind::Blobs, 128, 0.2, 4).unwrap();
        let net = Network::mlp(&[2, 16, 16, 2], ActivationKind::Relu, 1.0, 5).unwrap();
        let rc = TrainConfig {
            epochs: 2,
            batch_size: 64,
            lr: 0.005,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_milestones: vec![],
            lr_drop: 0.1,
            rng_seed: 6,
        };
        let cfg = PruneConfig {
            zeta: 0.5,
            theta: 0.5,
            max_iterations: 4,
            method: PruneMethod::Nepenthe,
            exclude_zero_entropy_layers: false,
            eps_state: 0.0,
        };
        let run = nepenthe_loop(&net, &data, &data, &rc, &cfg).unwrap();
        for w in run.trace.windows(2) {
            assert!(w[1].unpruned < w[0].unpruned);
        }
        // one report per executed iteration plus the dense entry
        for (i, t) in run.trace.iter().enumerate() {
            assert_eq!(t.iteration, i);
            assert_eq!(t.report.iteration, i);
        }
    }
}
