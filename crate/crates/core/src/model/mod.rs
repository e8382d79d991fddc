//! Dilated dense-block 1D convolutional embedding network.

mod checkpoint;
mod config;
mod layers;
mod network;

pub use checkpoint::{fold_tag, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, CHECKPOINT_FORMAT_VERSION};
pub use config::{ArchitectureConfig, DILATION_PERIOD};
pub use layers::{BatchNorm, Conv1d, Linear, NormCache, Param, BN_EPSILON, BN_MOMENTUM};
pub use network::{ClassifierHead, EmbeddingNet, TrainPass};

/// Embedding vector with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub source: Option<crate::signal::WindowProvenance>,
    /// Model or ensemble identifier.
    pub model_id: String,
}
