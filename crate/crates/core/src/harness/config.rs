use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::PreprocessConfig;
use super::split::SubjectRule;
use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::evaluation::BootstrapConfig;
use crate::signal::{Round, Task};
use crate::training::TrainRunConfig;

/// Where z-score statistics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScope {
    /// Each fold model fits on its own training subset.
    #[default]
    PerFold,
    /// One fit over the whole training split, shared by every fold.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub test_rule: SubjectRule,
    pub exclude_tasks_from_training: Vec<Task>,
    /// Restrict training to these sessions (e.g. `[1]` to hold out session 2).
    pub train_sessions: Option<Vec<u8>>,
    pub folds: usize,
    pub normalization: NormalizationScope,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_rule: SubjectRule::InRound(Round(6)),
            exclude_tasks_from_training: vec![Task::Blg],
            train_sessions: None,
            folds: 4,
            normalization: NormalizationScope::PerFold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordingSelector {
    pub round: Round,
    pub session: u8,
    pub task: Task,
}

/// Enrollment and authentication recordings, and how many leading windows
/// are averaged into each subject's embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalProtocol {
    pub enroll: RecordingSelector,
    pub auth: RecordingSelector,
    pub n_windows: usize,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            enroll: RecordingSelector {
                round: Round(1),
                session: 1,
                task: Task::Tex,
            },
            auth: RecordingSelector {
                round: Round(1),
                session: 2,
                task: Task::Tex,
            },
            n_windows: 1,
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_windows == 0 {
            return Err(Error::Config("n_windows must be at least 1".into()));
        }
        if (self.enroll.round, self.enroll.session) == (self.auth.round, self.auth.session) {
            return Err(Error::Config(format!(
                "enrollment and authentication both use {} session {}",
                self.enroll.round, self.enroll.session
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub ensemble_size: usize,
    pub protocol: EvalProtocol,
    pub bootstrap: bool,
    pub bootstrap_config: BootstrapConfig,
    /// Directory holding `model_F*.json` checkpoints; defaults to `<output_dir>/checkpoints`.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            ensemble_size: 4,
            protocol: EvalProtocol::default(),
            bootstrap: false,
            bootstrap_config: BootstrapConfig::default(),
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Task,
    Round,
    Duration,
    SamplingRate,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Task => "task",
            SweepAxis::Round => "round",
            SweepAxis::Duration => "duration",
            SweepAxis::SamplingRate => "sampling_rate",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task" => Ok(SweepAxis::Task),
            "round" => Ok(SweepAxis::Round),
            "duration" => Ok(SweepAxis::Duration),
            "sampling_rate" => Ok(SweepAxis::SamplingRate),
            _ => Err(Error::Config(format!(
                "unknown sweep axis {s:?} (expected task, round, duration or sampling_rate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<String>,
    /// Checkpoint directory per sampling rate (key is the rate in Hz as written in `values`).
    pub checkpoint_dirs: BTreeMap<String, PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::Task,
            values: vec!["TEX".into()],
            checkpoint_dirs: BTreeMap::new(),
        }
    }
}

/// Complete experiment description, read from TOML. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub split: SplitConfig,
    pub preprocess: PreprocessConfig,
    pub train: TrainRunConfig,
    pub evaluation: EvaluationConfig,
    pub sweep: SweepConfig,
    pub synthetic: SyntheticSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            manifest: None,
            output_dir: PathBuf::from("runs/default"),
            split: SplitConfig::default(),
            preprocess: PreprocessConfig::default(),
            train: TrainRunConfig::default(),
            evaluation: EvaluationConfig::default(),
            sweep: SweepConfig::default(),
            synthetic: SyntheticSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Propagates the top-level seed, stretches the learning-rate schedule
    /// to the epoch count, and validates.
    pub fn finalize(mut self) -> Result<Self> {
        self.train.seed = self.seed;
        self.synthetic.seed = self.seed;
        self.evaluation.bootstrap_config.seed = self.seed;
        if self.train.schedule.total_epochs != self.train.epochs as f64 {
            self.train.schedule = self.train.schedule.scaled_to(self.train.epochs);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        if self.split.folds == 0 {
            return Err(Error::Config("folds must be at least 1".into()));
        }
        if self.evaluation.ensemble_size != self.split.folds {
            return Err(Error::Config(format!(
                "ensemble_size {} must equal the fold count {}",
                self.evaluation.ensemble_size, self.split.folds
            )));
        }
        self.preprocess.validate().map_err(cfg)?;
        self.train.validate().map_err(cfg)?;
        self.evaluation.protocol.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.evaluation
            .checkpoint_dir
            .clone()
            .unwrap_or_else(|| self.output_dir.join("checkpoints"))
    }
}
