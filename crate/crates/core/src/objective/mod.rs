//! Multi-similarity metric loss with online pair mining, cross-entropy, and
//! their weighted combination.

mod loss;
mod miner;
mod similarity;

pub use loss::{
    ce_loss, ce_loss_with_grad, combined_loss, ms_loss, ms_loss_embeddings, ms_loss_with_sim_grad,
    LossConfig,
};
pub use miner::{mine_pairs, PairSets};
pub use similarity::{l2_normalize_rows, SimilarityMatrix};
