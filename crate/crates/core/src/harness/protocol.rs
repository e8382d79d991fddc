use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{EvalProtocol, EvaluationConfig, ExperimentConfig, RecordingSelector, SweepAxis};
use super::dataset::{row_windows, PreprocessConfig};
use super::manifest::{Manifest, ManifestRow};
use crate::error::{Error, Result};
use crate::evaluation::{
    bootstrap_metrics, build_score_set, centroid, compute_roc, ensemble_embed, rank1_identification, BootstrapReport,
    LabeledEmbedding, ScoreSet, ScoredPair, FAR_GRID,
};
use crate::model::{load_checkpoint, Checkpoint, EmbeddingVector};
use crate::signal::{Round, SubjectId, Task};

/// Loads `model_F<k>.json` checkpoints from `dir`, ordered by fold.
pub fn discover_checkpoints(dir: &Path) -> Result<Vec<Checkpoint>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Config(format!("checkpoint directory {}: {e}", dir.display())))?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(fold) = name
            .strip_prefix("model_F")
            .and_then(|r| r.strip_suffix(".json"))
            .and_then(|f| f.parse::<usize>().ok())
        {
            found.push((fold, path));
        }
    }
    if found.is_empty() {
        return Err(Error::Config(format!("no model_F*.json checkpoints in {}", dir.display())));
    }
    found.sort();
    found.iter().map(|(_, p)| load_checkpoint(p)).collect()
}

pub fn checkpoint_stem(fold: Option<usize>) -> String {
    format!("model_{}", crate::model::fold_tag(fold))
}

/// Ensemble embeddings per recording, computed once and reused across
/// protocols. Invalid windows are kept as `None` so window indices stay aligned.
pub struct Embedder<'a> {
    manifest: &'a Manifest,
    preprocess: PreprocessConfig,
    models: &'a [Checkpoint],
    ensemble_size: usize,
    cache: HashMap<(SubjectId, Round, u8, Task), Vec<Option<EmbeddingVector>>>,
}

impl<'a> Embedder<'a> {
    pub fn new(manifest: &'a Manifest, preprocess: PreprocessConfig, models: &'a [Checkpoint], ensemble_size: usize) -> Result<Self> {
        if models.len() != ensemble_size {
            return Err(Error::Config(format!(
                "found {} checkpoints but the ensemble size is {ensemble_size}",
                models.len()
            )));
        }
        Ok(Embedder {
            manifest,
            preprocess,
            models,
            ensemble_size,
            cache: HashMap::new(),
        })
    }

    pub fn recording(&mut self, row: &ManifestRow) -> Result<&[Option<EmbeddingVector>]> {
        let key = row.key();
        if !self.cache.contains_key(&key) {
            let windows = row_windows(self.manifest, row, &self.preprocess)?;
            if let Some(m) = self.models.iter().find(|m| m.meta.window_len != windows.first().map_or(m.meta.window_len, |w| w.len())) {
                return Err(Error::Config(format!(
                    "checkpoint {} expects windows of {} samples, data yields {}",
                    m.tag(),
                    m.meta.window_len,
                    windows[0].len()
                )));
            }
            let valid: Vec<&crate::signal::VelocityWindow> = windows.iter().filter(|w| w.is_valid()).collect();
            let mut embedded = ensemble_embed(&valid, self.models, self.ensemble_size)?.into_iter();
            let entry = windows
                .iter()
                .map(|w| if w.is_valid() { embedded.next() } else { None })
                .collect();
            self.cache.insert(key, entry);
        }
        Ok(&self.cache[&key])
    }

    /// One centroid per subject over the valid windows among the first
    /// `n_windows` of the selected recording. Subjects without any are absent.
    pub fn subject_embeddings(&mut self, selector: &RecordingSelector, n_windows: usize) -> Result<Vec<LabeledEmbedding>> {
        let rows: Vec<ManifestRow> = self
            .manifest
            .rows
            .iter()
            .filter(|r| r.round == selector.round && r.session == selector.session && r.task == selector.task)
            .cloned()
            .collect();
        let mut out = Vec::new();
        for row in rows {
            let windows = self.recording(&row)?;
            let picked: Vec<&[f64]> = windows
                .iter()
                .take(n_windows)
                .flatten()
                .map(|e| e.values.as_slice())
                .collect();
            if picked.is_empty() {
                log::warn!("subject {} has no valid window in {:?}; excluded", row.subject_id, selector);
                continue;
            }
            out.push((row.subject_id, centroid(&picked)?));
        }
        out.sort_by_key(|(s, _)| *s);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub eer: f64,
    pub positives: usize,
    pub negatives: usize,
    pub frr_at_far: Vec<(f64, f64)>,
    pub rank1: f64,
    pub bootstrap: Option<BootstrapReport>,
    #[serde(skip)]
    pub scores: ScoreSet,
    #[serde(skip)]
    pub pairs: Vec<ScoredPair>,
}

pub fn evaluate_protocol(embedder: &mut Embedder, protocol: &EvalProtocol, eval: &EvaluationConfig) -> Result<ProtocolResult> {
    protocol.validate()?;
    let enroll = embedder.subject_embeddings(&protocol.enroll, protocol.n_windows)?;
    let auth = embedder.subject_embeddings(&protocol.auth, protocol.n_windows)?;
    let (scores, pairs) = build_score_set(&enroll, &auth)?;
    let roc = compute_roc(&scores)?;
    let frr_at_far = FAR_GRID
        .iter()
        .map(|&f| Ok((f, roc.frr_at_far(f)?)))
        .collect::<Result<_>>()?;
    let bootstrap = if eval.bootstrap {
        Some(bootstrap_metrics(&scores, eval.bootstrap_config.clone())?)
    } else {
        None
    };
    Ok(ProtocolResult {
        eer: roc.eer(),
        positives: scores.positives(),
        negatives: scores.negatives(),
        frr_at_far,
        rank1: rank1_identification(&enroll, &auth)?,
        bootstrap,
        scores,
        pairs,
    })
}

pub const SWEEP_HEADER: [&str; 11] = [
    "axis",
    "value",
    "eer",
    "P",
    "N",
    "frr_far_1e1",
    "frr_far_1e2",
    "frr_far_1e3",
    "frr_far_1e4",
    "boot_mean_eer",
    "boot_sd_eer",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: String,
    pub eer: f64,
    pub positives: usize,
    pub negatives: usize,
    pub frr_at_far: [f64; 4],
    pub boot_mean_eer: Option<f64>,
    pub boot_sd_eer: Option<f64>,
}

impl SweepRow {
    fn from_result(axis: SweepAxis, value: &str, r: &ProtocolResult) -> Self {
        let mut frr = [0.0; 4];
        for (slot, (_, v)) in frr.iter_mut().zip(&r.frr_at_far) {
            *slot = *v;
        }
        SweepRow {
            axis,
            value: value.to_string(),
            eer: r.eer,
            positives: r.positives,
            negatives: r.negatives,
            frr_at_far: frr,
            boot_mean_eer: r.bootstrap.as_ref().map(|b| b.eer.mean),
            boot_sd_eer: r.bootstrap.as_ref().map(|b| b.eer.sd),
        }
    }
}

fn parse_value<T: std::str::FromStr>(axis: SweepAxis, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad {} sweep value {v:?}", axis.as_str())))
}

/// One evaluation row per sweep value. Checkpoints come from
/// `checkpoint_dir`, except on the sampling-rate axis where each rate has
/// its own directory in the sweep configuration.
pub fn run_sweep(config: &ExperimentConfig, manifest: &Manifest, axis: SweepAxis, values: &[String]) -> Result<Vec<SweepRow>> {
    let base = &config.evaluation.protocol;
    let eval = &config.evaluation;
    let mut rows = Vec::with_capacity(values.len());
    if axis == SweepAxis::SamplingRate {
        for value in values {
            let rate: f64 = parse_value(axis, value)?;
            let dir = config
                .sweep
                .checkpoint_dirs
                .get(value.trim())
                .ok_or_else(|| Error::Config(format!("no checkpoint directory configured for sampling rate {value} Hz")))?;
            let models = discover_checkpoints(dir)?;
            if let Some(m) = models.iter().find(|m| (m.meta.sampling_rate_hz - rate).abs() > 1e-9) {
                return Err(Error::Config(format!(
                    "checkpoint {} in {} was trained at {} Hz, not {rate} Hz",
                    m.tag(),
                    dir.display(),
                    m.meta.sampling_rate_hz
                )));
            }
            let pre = PreprocessConfig {
                target_sampling_rate_hz: Some(rate),
                ..config.preprocess.clone()
            };
            let mut embedder = Embedder::new(manifest, pre, &models, eval.ensemble_size)?;
            let r = evaluate_protocol(&mut embedder, base, eval)?;
            rows.push(SweepRow::from_result(axis, value, &r));
        }
        return Ok(rows);
    }
    let models = discover_checkpoints(&config.checkpoint_dir())?;
    let mut embedder = Embedder::new(manifest, config.preprocess.clone(), &models, eval.ensemble_size)?;
    for value in values {
        let mut protocol = base.clone();
        match axis {
            SweepAxis::Task => {
                let task: Task = parse_value(axis, value)?;
                protocol.enroll.task = task;
                protocol.auth.task = task;
            }
            SweepAxis::Round => {
                let round: Round = parse_value(axis, value)?;
                protocol.enroll.round = Round(1);
                protocol.enroll.session = 1;
                protocol.auth.round = round;
                protocol.auth.session = 2;
            }
            SweepAxis::Duration => protocol.n_windows = parse_value(axis, value)?,
            SweepAxis::SamplingRate => unreachable!(),
        }
        let r = evaluate_protocol(&mut embedder, &protocol, eval)?;
        rows.push(SweepRow::from_result(axis, value, &r));
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    w.write_record(SWEEP_HEADER).map_err(err)?;
    for r in rows {
        let mut rec = vec![
            r.axis.as_str().to_string(),
            r.value.clone(),
            r.eer.to_string(),
            r.positives.to_string(),
            r.negatives.to_string(),
        ];
        rec.extend(r.frr_at_far.iter().map(|v| v.to_string()));
        rec.push(opt(r.boot_mean_eer));
        rec.push(opt(r.boot_sd_eer));
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    super::store::write_bytes(path, &bytes)
}
