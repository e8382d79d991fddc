//! Enrollment/authentication scoring and error-rate metrics.

mod bootstrap;
mod embedding;
mod identification;
mod roc;
mod scores;
mod threshold;

pub use bootstrap::{bootstrap_metrics, BootstrapConfig, BootstrapReport, Bootstrapper, MeanSd, Replicate, FAR_GRID};
pub use embedding::{centroid, cosine_similarity, ensemble_embed};
pub use identification::rank1_identification;
pub use roc::{compute_roc, eer, frr_at_far, Crossing, RocCurve, RocPoint, ScoreHistogram, ScoreSet};
pub use scores::{build_score_set, score_pairs, split_pairs, LabeledEmbedding, PairType, ScoredPair};
pub use threshold::{apply_threshold, fit_threshold_eer};
