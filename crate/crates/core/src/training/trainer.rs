use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArchitectureConfig, EmbeddingNet};
use crate::objective::{ce_loss_with_grad, combined_loss, ms_loss_embeddings, LossConfig};
use crate::signal::{fit_normalization, normalize, NormalizationStats, SubjectId, Task, VelocityWindow};
use crate::training::adam::{Adam, AdamConfig};
use crate::training::folds::FoldAssignment;
use crate::training::map_at_r::map_at_r;
use crate::training::sampler::{batch_rng, epoch_batches, sample_minibatch, SubjectWindows};
use crate::training::schedule::OneCycleSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRunConfig {
    pub architecture: ArchitectureConfig,
    pub loss: LossConfig,
    pub subjects_per_batch: usize,
    pub windows_per_subject: usize,
    pub epochs: usize,
    pub schedule: OneCycleSchedule,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Task whose validation windows feed the per-epoch MAP@R; `None` uses all.
    pub map_at_r_task: Option<Task>,
    pub log_map_at_r: bool,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            architecture: ArchitectureConfig::default(),
            loss: LossConfig::default(),
            subjects_per_batch: 16,
            windows_per_subject: 16,
            epochs: 100,
            schedule: OneCycleSchedule::default(),
            adam: AdamConfig::default(),
            seed: 0,
            map_at_r_task: Some(Task::Tex),
            log_map_at_r: true,
        }
    }
}

impl TrainRunConfig {
    pub fn batch_size(&self) -> usize {
        self.subjects_per_batch * self.windows_per_subject
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        self.loss.validate()?;
        self.schedule.validate()?;
        if self.batch_size() < 2 {
            return Err(Error::invalid("minibatch must hold at least two windows"));
        }
        if self.schedule.total_epochs != self.epochs as f64 {
            return Err(Error::Config(format!(
                "schedule spans {} epochs but training runs {}",
                self.schedule.total_epochs, self.epochs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub fold: Option<usize>,
    pub epoch: usize,
    pub loss: f64,
    pub ms_loss: f64,
    pub ce_loss: f64,
    pub lr: f64,
    pub val_map_at_r: Option<f64>,
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: EmbeddingNet,
    pub normalization: NormalizationStats,
    pub fold_id: Option<usize>,
    pub seed: u64,
    pub log: Vec<EpochLog>,
    pub window_len: usize,
}

/// Channel-major window data stacked into a `batch x 2 x T` buffer.
fn stack(windows: &[&VelocityWindow]) -> Vec<f64> {
    let mut out = Vec::with_capacity(windows.iter().map(|w| 2 * w.len()).sum());
    for w in windows {
        out.extend_from_slice(&w.values[0]);
        out.extend_from_slice(&w.values[1]);
    }
    out
}

/// Inference embeddings for normalized windows of equal length.
pub fn embed_windows(net: &EmbeddingNet, windows: &[&VelocityWindow], chunk: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(windows.len() * net.embedding_dim());
    for group in windows.chunks(chunk.max(1)) {
        let len = group[0].len();
        if group.iter().any(|w| w.len() != len) {
            return Err(Error::invalid("windows in one inference batch differ in length"));
        }
        out.extend(net.embed(&stack(group), group.len(), len)?);
    }
    Ok(out)
}

fn dump_state(dir: Option<&Path>, fold: Option<usize>, detail: &serde_json::Value) -> Option<String> {
    let dir = dir?;
    let path = dir.join(format!("numerical_failure_{}.json", crate::model::fold_tag(fold)));
    fs::create_dir_all(dir).ok()?;
    fs::write(&path, serde_json::to_string_pretty(detail).ok()?).ok()?;
    Some(path.display().to_string())
}

/// Trains one model on `train` windows (raw velocities) and reports
/// MAP@R on `validation` each epoch. Normalization statistics are fitted on
/// the training windows unless `normalization` overrides them.
///
/// Runs exactly `epochs x epoch_batches` optimizer steps and keeps the final
/// weights. A non-finite loss aborts the run; the failing state is written to
/// `dump_dir` when given.
pub fn train_fold(
    config: &TrainRunConfig,
    train: &[VelocityWindow],
    validation: &[VelocityWindow],
    fold_id: Option<usize>,
    normalization: Option<NormalizationStats>,
    dump_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("no training windows"));
    }
    let window_len = train[0].len();
    if train.iter().chain(validation).any(|w| w.len() != window_len) {
        return Err(Error::invalid("all windows must share one length"));
    }
    let stats = match normalization {
        Some(s) => s,
        None => fit_normalization(train)?,
    };
    let train_n: Vec<VelocityWindow> = train.iter().map(|w| normalize(w, &stats)).collect::<Result<_>>()?;
    let val_n: Vec<VelocityWindow> = validation
        .iter()
        .filter(|w| config.map_at_r_task.is_none_or(|t| w.provenance.meta.task == t))
        .map(|w| normalize(w, &stats))
        .collect::<Result<_>>()?;

    let subjects: BTreeSet<SubjectId> = train_n.iter().map(|w| w.provenance.meta.subject_id).collect();
    let class_of: BTreeMap<SubjectId, usize> = subjects.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut arch = config.architecture.clone();
    if config.loss.w_ce > 0.0 {
        match arch.num_classes {
            None => arch.num_classes = Some(subjects.len()),
            Some(n) if n != subjects.len() => {
                return Err(Error::Config(format!(
                    "classification head has {n} classes but the training set has {} subjects",
                    subjects.len()
                )))
            }
            Some(_) => {}
        }
    }
    let seed = config.seed.wrapping_add(fold_id.unwrap_or(0) as u64);
    let mut net = EmbeddingNet::new(arch, seed)?;
    let mut index: SubjectWindows = BTreeMap::new();
    for (i, w) in train_n.iter().enumerate() {
        index.entry(w.provenance.meta.subject_id).or_default().push(i);
    }

    let mut opt = Adam::new(config.adam);
    let steps_per_epoch = epoch_batches(train_n.len(), config.batch_size())?;
    let emb_dim = net.embedding_dim();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (mut sum_loss, mut sum_ms, mut sum_ce) = (0.0, 0.0, 0.0);
        let mut lr = 0.0;
        for step in 0..steps_per_epoch {
            lr = config
                .schedule
                .lr_at(epoch as f64 + step as f64 / steps_per_epoch as f64)?;
            let picks = sample_minibatch(
                &mut batch_rng(seed, epoch, step),
                &index,
                config.subjects_per_batch,
                config.windows_per_subject,
            )?;
            let windows: Vec<&VelocityWindow> = picks.iter().map(|&i| &train_n[i]).collect();
            let labels: Vec<SubjectId> = windows.iter().map(|w| w.provenance.meta.subject_id).collect();
            let input = stack(&windows);
            net.zero_grad();
            let pass = net.forward_train(&input, windows.len(), window_len)?;
            let (ms, mut d_emb) = ms_loss_embeddings(&pass.embeddings, emb_dim, &labels, &config.loss)?;
            d_emb.iter_mut().for_each(|g| *g *= config.loss.w_ms);
            let (ce, d_logits) = match &pass.logits {
                Some(logits) if config.loss.w_ce > 0.0 => {
                    let targets: Vec<usize> = labels.iter().map(|s| class_of[s]).collect();
                    let (ce, mut g) = ce_loss_with_grad(logits, class_of.len(), &targets)?;
                    g.iter_mut().for_each(|v| *v *= config.loss.w_ce);
                    (ce, Some(g))
                }
                _ => (0.0, None),
            };
            let loss = combined_loss(ms, ce, config.loss.w_ms, config.loss.w_ce);
            if !loss.is_finite() {
                let detail = serde_json::json!({
                    "fold": fold_id, "epoch": epoch, "step": step, "lr": lr,
                    "ms_loss": ms.to_string(), "ce_loss": ce.to_string(),
                    "param_norms": net.params().iter()
                        .map(|p| p.value.iter().map(|v| v * v).sum::<f64>().sqrt().to_string())
                        .collect::<Vec<_>>(),
                    "epoch_log": &log,
                });
                let dumped = dump_state(dump_dir, fold_id, &detail);
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {epoch}, step {step} (lr {lr:e}){}",
                    dumped.map(|p| format!("; state written to {p}")).unwrap_or_default()
                )));
            }
            net.backward(&pass, &d_emb, d_logits.as_deref())?;
            opt.step(net.params_mut(), lr);
            sum_loss += loss;
            sum_ms += ms;
            sum_ce += ce;
        }
        let n = steps_per_epoch as f64;
        let val_map_at_r = if config.log_map_at_r && !val_n.is_empty() {
            let refs: Vec<&VelocityWindow> = val_n.iter().collect();
            let emb = embed_windows(&net, &refs, 64)?;
            let labels: Vec<SubjectId> = refs.iter().map(|w| w.provenance.meta.subject_id).collect();
            map_at_r(&emb, emb_dim, &labels).ok()
        } else {
            None
        };
        let entry = EpochLog {
            fold: fold_id,
            epoch,
            loss: sum_loss / n,
            ms_loss: sum_ms / n,
            ce_loss: sum_ce / n,
            lr,
            val_map_at_r,
        };
        log::info!(
            "fold {:?} epoch {epoch}: loss {:.5} lr {lr:.2e} map@r {:?}",
            fold_id,
            entry.loss,
            entry.val_map_at_r
        );
        log.push(entry);
    }
    Ok(TrainOutcome {
        net,
        normalization: stats,
        fold_id,
        seed,
        log,
        window_len,
    })
}

/// Cross-validated training: one model per fold with that fold held out.
/// With a single fold, one model is trained on everything.
pub fn train_cv(
    config: &TrainRunConfig,
    windows: &[VelocityWindow],
    folds: &FoldAssignment,
    pooled_normalization: Option<NormalizationStats>,
    dump_dir: Option<&Path>,
) -> Result<Vec<TrainOutcome>> {
    if let Some(w) = windows.iter().find(|w| folds.fold_of(w.provenance.meta.subject_id).is_none()) {
        return Err(Error::invalid(format!(
            "subject {} has no fold assignment",
            w.provenance.meta.subject_id
        )));
    }
    if folds.k == 1 {
        let outcome = train_fold(config, windows, &[], Some(0), pooled_normalization, dump_dir)?;
        return Ok(vec![outcome]);
    }
    (0..folds.k)
        .map(|fold| {
            let (val, train): (Vec<_>, Vec<_>) = windows
                .iter()
                .cloned()
                .partition(|w| folds.fold_of(w.provenance.meta.subject_id) == Some(fold));
            train_fold(config, &train, &val, Some(fold), pooled_normalization, dump_dir)
        })
        .collect()
}

/// Appends epoch records as JSON lines.
pub fn write_run_log(path: &Path, entries: &[EpochLog]) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for e in entries {
        let line = serde_json::to_string(e).expect("log entry serializes");
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
