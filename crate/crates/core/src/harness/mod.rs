//! Manifests, recording files, synthetic data, experiment configuration,
//! protocol evaluation, sweeps and persistence.

mod config;
mod dataset;
mod manifest;
mod pipeline;
mod protocol;
mod recording_io;
mod split;
mod store;
mod synthetic;

pub use config::{
    EvalProtocol, EvaluationConfig, ExperimentConfig, NormalizationScope, RecordingSelector, SplitConfig, SweepAxis,
    SweepConfig,
};
pub use dataset::{decimation_factor, load_recording, load_windows, row_windows, PreprocessConfig};
pub use manifest::{load_manifest, load_manifest_unchecked, write_manifest, Manifest, ManifestRow, MANIFEST_HEADER};
pub use pipeline::{load_split, train_experiment, TrainingSummary};
pub use protocol::{
    checkpoint_stem, discover_checkpoints, evaluate_protocol, run_sweep, write_sweep_csv, Embedder, ProtocolResult,
    SweepRow, SWEEP_HEADER,
};
pub use recording_io::{read_recording, read_trace, write_recording, RawTrace};
pub use split::{split_train_test, SubjectRule};
pub use store::{export_embeddings, read_scores_csv, write_bytes, write_json, write_scores_csv, SCORE_HEADER};
pub use synthetic::{
    draw_signatures, generate_synthetic, synthesize_recording, synthetic_metas, SignatureBands, SubjectSignature,
    SyntheticDataset, SyntheticSpec,
};
