use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::embedding::cosine_similarity;
use super::roc::ScoreSet;
use crate::error::{Error, Result};
use crate::signal::SubjectId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairType {
    Genuine,
    Impostor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair_type: PairType,
    pub enroll_subject: SubjectId,
    pub auth_subject: SubjectId,
    pub score: f64,
}

/// One labeled embedding per subject on each side.
pub type LabeledEmbedding = (SubjectId, Vec<f64>);

/// Scores every enrollment against every authentication embedding.
/// Same subject gives a genuine pair, anything else an impostor pair.
pub fn score_pairs(enroll: &[LabeledEmbedding], auth: &[LabeledEmbedding]) -> Result<Vec<ScoredPair>> {
    let mut pairs = Vec::with_capacity(enroll.len() * auth.len());
    for (es, e) in enroll {
        for (asub, a) in auth {
            pairs.push(ScoredPair {
                pair_type: if es == asub { PairType::Genuine } else { PairType::Impostor },
                enroll_subject: *es,
                auth_subject: *asub,
                score: cosine_similarity(e, a)?,
            });
        }
    }
    Ok(pairs)
}

pub fn split_pairs(pairs: &[ScoredPair]) -> ScoreSet {
    let mut set = ScoreSet::default();
    for p in pairs {
        match p.pair_type {
            PairType::Genuine => set.genuine.push(p.score),
            PairType::Impostor => set.impostor.push(p.score),
        }
    }
    set
}

/// Builds the score set for a protocol. Fails with `MetricUnavailable`
/// when either side ends up empty.
pub fn build_score_set(
    enroll: &[LabeledEmbedding],
    auth: &[LabeledEmbedding],
) -> Result<(ScoreSet, Vec<ScoredPair>)> {
    let unique: BTreeSet<SubjectId> = enroll.iter().map(|(s, _)| *s).collect();
    if unique.len() != enroll.len() {
        return Err(Error::invalid("duplicate subject among enrollment embeddings"));
    }
    let pairs = score_pairs(enroll, auth)?;
    let set = split_pairs(&pairs);
    if set.genuine.is_empty() || set.impostor.is_empty() {
        return Err(Error::MetricUnavailable(format!(
            "protocol yields P={} N={}",
            set.genuine.len(),
            set.impostor.len()
        )));
    }
    Ok((set, pairs))
}
