use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, NormalizationScope};
use super::dataset::load_windows;
use super::manifest::{load_manifest, Manifest};
use super::protocol::checkpoint_stem;
use super::split::{split_train_test, SubjectRule};
use super::store::write_json;
use crate::error::{Error, Result};
use crate::model::save_checkpoint;
use crate::signal::{fit_normalization, SubjectId};
use crate::training::{assign_folds, train_cv, write_run_log, EpochLog, FoldAssignment};

/// Manifest from the configuration, split into (train, test). Without a
/// held-out population every subject is on both sides.
pub fn load_split(config: &ExperimentConfig) -> Result<(Manifest, Manifest)> {
    let path = config
        .manifest
        .as_ref()
        .ok_or_else(|| Error::Config("no manifest path configured".into()))?;
    let manifest = load_manifest(path)?;
    let (train, test) = match &config.split.test_rule {
        SubjectRule::NoHoldout => {
            let excluded = &config.split.exclude_tasks_from_training;
            Ok((manifest.filtered(|r| !excluded.contains(&r.task)), manifest))
        }
        rule => split_train_test(&manifest, rule, &config.split.exclude_tasks_from_training),
    }?;
    let train = match &config.split.train_sessions {
        Some(sessions) => train.filtered(|r| sessions.contains(&r.session)),
        None => train,
    };
    if train.is_empty() {
        return Err(Error::Config("the split leaves no training recordings".into()));
    }
    Ok((train, test))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub checkpoints: Vec<PathBuf>,
    pub run_log: PathBuf,
    pub folds: Vec<(SubjectId, usize)>,
    pub final_loss: Vec<f64>,
}

/// Trains one model per fold on the training split and writes
/// `checkpoints/model_F<k>.{json,weights}`, `train_log.jsonl` and `folds.json`
/// under `out_dir`.
pub fn train_experiment(config: &ExperimentConfig, train_manifest: &Manifest, out_dir: &Path) -> Result<TrainingSummary> {
    let windows = load_windows(train_manifest, &config.preprocess)?;
    if windows.is_empty() {
        return Err(Error::Data("training split yields no windows".into()));
    }
    let rates: Vec<f64> = train_manifest.rows.iter().map(|r| r.sampling_rate_hz).collect();
    let native = rates[0];
    if rates.iter().any(|&r| r != native) {
        return Err(Error::Data("training recordings mix sampling rates".into()));
    }
    let effective_rate = config.preprocess.target_sampling_rate_hz.unwrap_or(native);
    let folds: FoldAssignment = assign_folds(&train_manifest.recording_counts(), config.split.folds)
        .map_err(|e| Error::Config(e.to_string()))?;
    let pooled = match config.split.normalization {
        NormalizationScope::Pooled => Some(fit_normalization(&windows)?),
        NormalizationScope::PerFold => None,
    };
    let outcomes = train_cv(&config.train, &windows, &folds, pooled, Some(out_dir))?;
    let ckpt_dir = out_dir.join("checkpoints");
    let mut checkpoints = Vec::new();
    let mut log: Vec<EpochLog> = Vec::new();
    for o in &outcomes {
        checkpoints.push(save_checkpoint(
            &ckpt_dir,
            &checkpoint_stem(o.fold_id),
            &o.net,
            o.seed,
            o.fold_id,
            o.normalization,
            o.window_len,
            effective_rate,
        )?);
        log.extend(o.log.iter().cloned());
    }
    let run_log = out_dir.join("train_log.jsonl");
    if run_log.exists() {
        std::fs::remove_file(&run_log).map_err(|e| Error::io(&run_log, e))?;
    }
    write_run_log(&run_log, &log)?;
    let fold_list: Vec<(SubjectId, usize)> = folds.folds.iter().map(|(s, f)| (*s, *f)).collect();
    write_json(&out_dir.join("folds.json"), &fold_list)?;
    Ok(TrainingSummary {
        checkpoints,
        run_log,
        folds: fold_list,
        final_loss: outcomes.iter().map(|o| o.log.last().map_or(f64::NAN, |l| l.loss)).collect(),
    })
}
