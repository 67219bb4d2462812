//! End-to-end experiment runner and the run-summary report.
//!
//! All artifacts are deterministic functions of the config, with no
//! timestamps, so re-running a finished config reproduces the same bytes.
//! A marker file flags partially written runs; `report` refuses them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::{self, EntropyReport};
use crate::error::{Error, Result};
use crate::fold::{fold_all, fold_manifest, max_deviation};
use crate::harness::ExperimentConfig;
use crate::nn::train;
use crate::prune::{imp_loop, nepenthe_loop, PruneMethod, PruneRun};

pub const MARKER_FILE: &str = "run.incomplete";
pub const TREND_CSV_HEADER: &str = "iteration,method,H1,H2,H3,H4,H5,H6,top1,removed";
pub const ACCURACY_CSV_HEADER: &str = "iteration,method,top1,unpruned";
pub const REPORT_CSV_HEADER: &str = "method,H_min,top1,removed,total";

/// Machine-readable outcome of a finished run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: PruneMethod,
    pub dense_top1: f64,
    pub final_top1: f64,
    pub iterations_run: usize,
    pub accepted_iteration: usize,
    /// Layer entropies of the accepted model, ascending.
    pub layer_entropies: Vec<f64>,
    pub removable: usize,
    pub prunable_total: usize,
    pub unpruned_final: usize,
    pub folded: Option<usize>,
}

fn six_lowest(report: &EntropyReport) -> Vec<String> {
    let sorted = report.sorted_layer_entropies();
    (0..6)
        .map(|i| sorted.get(i).map(|h| format!("{h:.3}")).unwrap_or_default())
        .collect()
}

fn trend_csv(run: &PruneRun) -> String {
    let mut out = String::from(TREND_CSV_HEADER);
    out.push('\n');
    for t in &run.trace {
        let h = six_lowest(&t.report);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.2},{}\n",
            t.iteration,
            if t.iteration == 0 { "dense" } else { run.method.name() },
            h[0],
            h[1],
            h[2],
            h[3],
            h[4],
            h[5],
            t.accuracy * 100.0,
            t.report.removable_count()
        ));
    }
    out
}

fn accuracy_csv(run: &PruneRun) -> String {
    let mut out = String::from(ACCURACY_CSV_HEADER);
    out.push('\n');
    for t in &run.trace {
        out.push_str(&format!(
            "{},{},{:.2},{}\n",
            t.iteration,
            if t.iteration == 0 { "dense" } else { run.method.name() },
            t.accuracy * 100.0,
            t.unpruned
        ));
    }
    out
}

/// Train, prune, and write every artifact into the config's output dir.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let marker = dir.join(MARKER_FILE);
    fs::write(&marker, "running\n")?;

    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;

    let full = cfg.load_dataset()?;
    let (train_split, val_split, test_split) = full.split(0.1, 0.1, cfg.split_seed())?;

    let mut net = cfg.build_model(&train_split)?;
    train(&mut net, &train_split, &cfg.train)?;
    net.save(&dir.join("dense.ckpt"))?;

    let run = match cfg.prune.method {
        PruneMethod::Nepenthe => nepenthe_loop(&net, &train_split, &val_split, &cfg.retrain, &cfg.prune)?,
        PruneMethod::Imp => imp_loop(&net, &train_split, &val_split, &cfg.retrain, &cfg.prune)?,
    };

    let mut neuron_rows = String::from(entropy::NEURON_CSV_HEADER);
    neuron_rows.push('\n');
    let mut layer_rows = String::from(entropy::LAYER_CSV_HEADER);
    layer_rows.push('\n');
    for t in &run.trace {
        neuron_rows.push_str(&entropy::neuron_csv(&t.report).lines().skip(1).collect::<Vec<_>>().join("\n"));
        neuron_rows.push('\n');
        layer_rows.push_str(&entropy::layer_csv(&t.report).lines().skip(1).collect::<Vec<_>>().join("\n"));
        layer_rows.push('\n');
    }
    fs::write(dir.join("entropy_neurons.csv"), neuron_rows)?;
    fs::write(dir.join("entropy_layers.csv"), layer_rows)?;
    fs::write(dir.join("trend.csv"), trend_csv(&run))?;
    fs::write(dir.join("accuracy.csv"), accuracy_csv(&run))?;

    run.final_net.save(&dir.join("final.ckpt"))?;

    let accepted = run.accepted_iteration();
    let mut summary = RunSummary {
        method: run.method,
        dense_top1: run.dense_accuracy,
        final_top1: accepted.accuracy,
        iterations_run: run.trace.len() - 1,
        accepted_iteration: accepted.iteration,
        layer_entropies: accepted.report.sorted_layer_entropies(),
        removable: accepted.report.removable_count(),
        prunable_total: run.final_net.prunable().len(),
        unpruned_final: accepted.unpruned,
        folded: None,
    };

    if cfg.fold {
        let report = entropy::probe(&run.final_net, &train_split, cfg.prune.eps_state, accepted.iteration)?;
        let (folded, removed) = fold_all(&run.final_net, &report)?;
        let dev_ref = max_deviation(&run.final_net, &folded, &train_split)?;
        let dev_out = max_deviation(&run.final_net, &folded, &test_split)?;
        fs::write(
            dir.join("fold_manifest.txt"),
            fold_manifest(&removed, dev_ref, Some(dev_out)),
        )?;
        folded.save(&dir.join("folded.ckpt"))?;
        summary.folded = Some(removed.len());
    }

    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    fs::remove_file(&marker)?;
    Ok(summary)
}

/// Per-run one-line summary: method, smallest strictly positive layer
/// entropy at the accepted iteration, top-1, and removed/total.
pub fn report(dir: &Path) -> Result<String> {
    if dir.join(MARKER_FILE).exists() {
        return Err(Error::IncompleteRun(dir.to_path_buf()));
    }
    let summary_path = dir.join("summary.json");
    if !summary_path.exists() {
        return Err(Error::MissingArtifact(summary_path));
    }
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(summary_path)?)?;
    let h_min = summary
        .layer_entropies
        .iter()
        .copied()
        .find(|&h| h > 0.0);
    let h_csv = h_min.map(|h| format!("{h:.3}")).unwrap_or_default();
    let h_text = h_min.map(|h| format!("{h:.3}")).unwrap_or_else(|| "-".into());
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "{},{},{:.2},{},{}\n",
        summary.method.name(),
        h_csv,
        summary.final_top1 * 100.0,
        summary.removable,
        summary.prunable_total
    ));
    out.push_str(&format!(
        "{}: H_min={} top-1={:.2} removed={}/{}\n",
        summary.method.name(),
        h_text,
        summary.final_top1 * 100.0,
        summary.removable,
        summary.prunable_total
    ));
    Ok(out)
}

/// Absolute artifact paths of a run directory.
pub fn artifact_paths(dir: &Path) -> Vec<PathBuf> {
    [
        "config.json",
        "dense.ckpt",
        "final.ckpt",
        "entropy_neurons.csv",
        "entropy_layers.csv",
        "trend.csv",
        "accuracy.csv",
        "summary.json",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{DatasetSpec, SyntheticKind};
    use crate::nn::TrainConfig;

    fn tiny_cfg(dir: &Path, method: PruneMethod) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset = DatasetSpec::Synthetic {
            kind: SyntheticKind::Blobs,
            n: 120,
            noise: 0.2,
        };
        cfg.model.preset = crate::harness::ModelPreset::Mlp { hidden: vec![8, 8] };
        cfg.train = TrainConfig {
            epochs: 4,
            batch_size: 32,
            lr: 0.02,
            momentum: 0.9,
            weight_decay: 1e-4,
            lr_milestones: vec![],
            lr_drop: 0.1,
            rng_seed: 0,
        };
        cfg.retrain = TrainConfig {
            epochs: 2,
            batch_size: 32,
            lr: 0.002,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_milestones: vec![],
            lr_drop: 0.1,
            rng_seed: 0,
        };
        cfg.prune.max_iterations = 2;
        cfg.prune.method = method;
        cfg.output_dir = dir.to_path_buf();
        cfg.seed = 5;
        cfg.derive_seeds();
        cfg
    }

    #[test]
    fn run_writes_artifacts_and_is_idempotent() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(tmp.path(), PruneMethod::Nepenthe);
        run_experiment(&cfg).unwrap();
        for p in artifact_paths(tmp.path()) {
            assert!(p.exists(), "{p:?} missing");
        }
        assert!(!tmp.path().join(MARKER_FILE).exists());
        let first: Vec<Vec<u8>> = artifact_paths(tmp.path())
            .iter()
            .map(|p| fs::read(p).unwrap())
            .collect();
        run_experiment(&cfg).unwrap();
        let second: Vec<Vec<u8>> = artifact_paths(tmp.path())
            .iter()
            .map(|p| fs::read(p).unwrap())
            .collect();
        assert_eq!(first, second);
    }

    #[test]
    fn trend_header_matches_schema() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(tmp.path(), PruneMethod::Imp);
        run_experiment(&cfg).unwrap();
        let trend = fs::read_to_string(tmp.path().join("trend.csv")).unwrap();
        assert!(trend.starts_with(TREND_CSV_HEADER));
        let first_row = trend.lines().nth(1).unwrap();
        assert!(first_row.starts_with("0,dense,"));
    }

    #[test]
    fn report_refuses_partial_runs() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join(MARKER_FILE), "running").unwrap();
        assert!(matches!(
            report(tmp.path()),
            Err(Error::IncompleteRun(_))
        ));
    }

    #[test]
    fn report_formats_summary() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(tmp.path(), PruneMethod::Nepenthe);
        run_experiment(&cfg).unwrap();
        let text = report(tmp.path()).unwrap();
        assert!(text.starts_with(REPORT_CSV_HEADER));
        assert!(text.contains("nepenthe,"));
        assert!(text.contains("removed="));
    }

    #[test]
    fn methods_share_config_shape() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tiny_cfg(tmp.path(), PruneMethod::Nepenthe);
        let b = tiny_cfg(tmp.path(), PruneMethod::Imp);
        let ja = serde_json::to_value(&a).unwrap();
        let jb = serde_json::to_value(&b).unwrap();
        // configs differ only in the method field
        let mut ja = ja;
        ja["prune"]["method"] = jb["prune"]["method"].clone();
        assert_eq!(ja, jb);
    }
}
