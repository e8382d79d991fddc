use std::path::{Path, PathBuf};

use gazeid_core::evaluation::{apply_threshold, fit_threshold_eer, rank1_identification, split_pairs, ScoreSet};
use gazeid_core::harness::{
    discover_checkpoints, evaluate_protocol, export_embeddings, generate_synthetic, load_manifest, load_split,
    read_scores_csv, row_windows, run_sweep, train_experiment, write_bytes, write_json, write_scores_csv,
    write_sweep_csv, Embedder, ExperimentConfig, Manifest,
};
use gazeid_core::signal::fit_normalization;
use gazeid_core::{Error, Result};
use serde_json::json;

pub fn synth(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let data = generate_synthetic(&cfg.synthetic, &cfg.output_dir)?;
    log::info!(
        "wrote {} recordings for {} subjects to {}",
        data.manifest.len(),
        data.signatures.len(),
        cfg.output_dir.display()
    );
    Ok(vec![data.manifest_path, cfg.output_dir.join("signatures.json")])
}

pub fn preprocess(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let full = load_manifest(cfg.manifest.as_ref().ok_or_else(|| Error::Config("no manifest path configured".into()))?)?;
    let (train, _) = load_split(cfg)?;
    let mut summary = String::from("subject_id,round,session,task,split,windows,valid_windows\n");
    let mut train_windows = Vec::new();
    for row in &full.rows {
        let windows = row_windows(&full, row, &cfg.preprocess)?;
        let in_train = train.rows.iter().any(|r| r.key() == row.key());
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.subject_id,
            row.round,
            row.session,
            row.task,
            if in_train { "train" } else { "test" },
            windows.len(),
            windows.iter().filter(|w| w.is_valid()).count()
        ));
        if in_train {
            train_windows.extend(windows);
        }
    }
    let stats = fit_normalization(&train_windows)?;
    let summary_path = cfg.output_dir.join("windows.csv");
    write_bytes(&summary_path, summary.as_bytes())?;
    let stats_path = cfg.output_dir.join("normalization.json");
    write_json(&stats_path, &stats)?;
    log::info!("{} training windows, mean {:.4}, std {:.4}", train_windows.len(), stats.mean, stats.std);
    Ok(vec![summary_path, stats_path])
}

pub fn train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let (train, _) = load_split(cfg)?;
    let summary = train_experiment(cfg, &train, &cfg.output_dir)?;
    for (i, loss) in summary.final_loss.iter().enumerate() {
        log::info!("model {i}: final epoch loss {loss:.5}");
    }
    let mut artifacts = summary.checkpoints;
    artifacts.push(summary.run_log);
    artifacts.push(cfg.output_dir.join("folds.json"));
    Ok(artifacts)
}

fn test_manifest(cfg: &ExperimentConfig) -> Result<Manifest> {
    Ok(load_split(cfg)?.1)
}

pub fn embed(cfg: &ExperimentConfig, checkpoints: &Path) -> Result<Vec<PathBuf>> {
    let models = discover_checkpoints(checkpoints)?;
    let manifest = test_manifest(cfg)?;
    let path = cfg.output_dir.join("embeddings.csv");
    let rows = export_embeddings(&manifest, &cfg.preprocess, &models, cfg.evaluation.ensemble_size, &path)?;
    log::info!("exported {rows} embeddings to {}", path.display());
    Ok(vec![path])
}

pub fn evaluate(cfg: &ExperimentConfig, checkpoints: &Path) -> Result<Vec<PathBuf>> {
    let models = discover_checkpoints(checkpoints)?;
    let manifest = test_manifest(cfg)?;
    let mut embedder = Embedder::new(&manifest, cfg.preprocess.clone(), &models, cfg.evaluation.ensemble_size)?;
    let result = evaluate_protocol(&mut embedder, &cfg.evaluation.protocol, &cfg.evaluation)?;
    log::info!(
        "EER {:.4} (P={}, N={}), rank-1 {:.4}",
        result.eer,
        result.positives,
        result.negatives,
        result.rank1
    );
    let scores_path = cfg.output_dir.join("scores.csv");
    write_scores_csv(&scores_path, &result.pairs)?;
    let metrics_path = cfg.output_dir.join("metrics.json");
    write_json(
        &metrics_path,
        &json!({ "protocol": cfg.evaluation.protocol, "result": result }),
    )?;
    Ok(vec![scores_path, metrics_path])
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let manifest = test_manifest(cfg)?;
    let rows = run_sweep(cfg, &manifest, cfg.sweep.axis, &cfg.sweep.values)?;
    let path = cfg.output_dir.join("sweep.csv");
    write_sweep_csv(&path, &rows)?;
    Ok(vec![path])
}

fn rates(set: &ScoreSet, threshold: f64) -> serde_json::Value {
    let (frr, far) = apply_threshold(set, threshold);
    json!({ "frr": frr, "far": far, "P": set.positives(), "N": set.negatives() })
}

pub fn fit_threshold(cfg: &ExperimentConfig, scores: &Path, apply: Option<&Path>) -> Result<Vec<PathBuf>> {
    let fit_set = split_pairs(&read_scores_csv(scores)?);
    let threshold = fit_threshold_eer(&fit_set)?;
    let applied = match apply {
        Some(p) => Some(rates(&split_pairs(&read_scores_csv(p)?), threshold)),
        None => None,
    };
    let path = cfg.output_dir.join("threshold.json");
    write_json(
        &path,
        &json!({
            "threshold": threshold,
            "fit_scores": scores,
            "fit": rates(&fit_set, threshold),
            "applied_scores": apply,
            "applied": applied,
        }),
    )?;
    log::info!("EER threshold {threshold}");
    Ok(vec![path])
}

pub fn identify(cfg: &ExperimentConfig, checkpoints: &Path) -> Result<Vec<PathBuf>> {
    let models = discover_checkpoints(checkpoints)?;
    let manifest = test_manifest(cfg)?;
    let protocol = &cfg.evaluation.protocol;
    protocol.validate()?;
    let mut embedder = Embedder::new(&manifest, cfg.preprocess.clone(), &models, cfg.evaluation.ensemble_size)?;
    let enroll = embedder.subject_embeddings(&protocol.enroll, protocol.n_windows)?;
    let auth = embedder.subject_embeddings(&protocol.auth, protocol.n_windows)?;
    let rate = rank1_identification(&enroll, &auth)?;
    log::info!("rank-1 identification {rate:.4}");
    let path = cfg.output_dir.join("identification.json");
    write_json(
        &path,
        &json!({
            "protocol": protocol,
            "rank1": rate,
            "enrolled": enroll.len(),
            "probes": auth.iter().filter(|(s, _)| enroll.iter().any(|(e, _)| e == s)).count(),
        }),
    )?;
    Ok(vec![path])
}
