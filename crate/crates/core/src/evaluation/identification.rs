use std::collections::BTreeSet;

use super::embedding::cosine_similarity;
use super::scores::LabeledEmbedding;
use crate::error::{Error, Result};
use crate::signal::SubjectId;

/// Fraction of authentication embeddings whose most similar enrollment
/// belongs to the same subject. A tie at the top counts as a miss.
/// Authentication subjects without an enrollment are ignored.
pub fn rank1_identification(enroll: &[LabeledEmbedding], auth: &[LabeledEmbedding]) -> Result<f64> {
    let enrolled: BTreeSet<SubjectId> = enroll.iter().map(|(s, _)| *s).collect();
    let probes: Vec<&LabeledEmbedding> = auth.iter().filter(|(s, _)| enrolled.contains(s)).collect();
    if probes.is_empty() {
        return Err(Error::MetricUnavailable(
            "no authentication subject appears in the enrollment set".into(),
        ));
    }
    let mut hits = 0usize;
    for (subject, probe) in &probes {
        let mut best = f64::NEG_INFINITY;
        let mut best_subjects: BTreeSet<SubjectId> = BTreeSet::new();
        for (es, e) in enroll {
            let s = cosine_similarity(probe, e)?;
            if s > best {
                best = s;
                best_subjects.clear();
                best_subjects.insert(*es);
            } else if s == best {
                best_subjects.insert(*es);
            }
        }
        if best_subjects.len() == 1 && best_subjects.contains(subject) {
            hits += 1;
        }
    }
    Ok(hits as f64 / probes.len() as f64)
}
