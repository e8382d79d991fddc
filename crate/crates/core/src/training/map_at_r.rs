use crate::error::{Error, Result};
use crate::objective::SimilarityMatrix;

/// Mean average precision at R over cosine-similarity retrieval.
///
/// Each query retrieves its `R = (class size - 1)` most similar other
/// samples; equal similarities are ordered by index. Queries from
/// singleton classes are skipped.
pub fn map_at_r<L: PartialEq>(embeddings: &[f64], dim: usize, labels: &[L]) -> Result<f64> {
    let sim = SimilarityMatrix::from_embeddings(embeddings, dim)?;
    let m = labels.len();
    if sim.size() != m {
        return Err(Error::invalid("embedding rows do not match label count"));
    }
    let mut total = 0.0;
    let mut queries = 0usize;
    let mut skipped = 0usize;
    for q in 0..m {
        let r = labels.iter().enumerate().filter(|&(i, l)| i != q && *l == labels[q]).count();
        if r == 0 {
            skipped += 1;
            continue;
        }
        let mut order: Vec<usize> = (0..m).filter(|&i| i != q).collect();
        order.sort_by(|&a, &b| sim.get(q, b).total_cmp(&sim.get(q, a)).then(a.cmp(&b)));
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (rank, &i) in order.iter().take(r).enumerate() {
            if labels[i] == labels[q] {
                hits += 1;
                ap += hits as f64 / (rank + 1) as f64;
            }
        }
        total += ap / r as f64;
        queries += 1;
    }
    if skipped > 0 {
        log::warn!("MAP@R skipped {skipped} queries from singleton classes");
    }
    if queries == 0 {
        return Err(Error::MetricUnavailable("MAP@R needs a class with two samples".into()));
    }
    Ok(total / queries as f64)
}
