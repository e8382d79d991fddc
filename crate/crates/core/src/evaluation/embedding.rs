use crate::error::{Error, Result};
use crate::model::{Checkpoint, EmbeddingVector};
use crate::signal::{normalize, VelocityWindow};
use crate::training::embed_windows;

/// Embeds raw velocity windows with every model and concatenates the
/// per-model embeddings in the order given (fold order `F0..`).
/// Each model applies its own normalization statistics.
pub fn ensemble_embed(
    windows: &[&VelocityWindow],
    models: &[Checkpoint],
    ensemble_size: usize,
) -> Result<Vec<EmbeddingVector>> {
    if models.len() != ensemble_size {
        return Err(Error::invalid(format!(
            "ensemble expects {ensemble_size} models, got {}",
            models.len()
        )));
    }
    let model_id = models.iter().map(|m| m.tag()).collect::<Vec<_>>().join("+");
    let total_dim: usize = models.iter().map(|m| m.net.embedding_dim()).sum();
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(total_dim); windows.len()];
    for model in models {
        let normalized: Vec<VelocityWindow> = windows
            .iter()
            .map(|w| normalize(w, &model.meta.normalization))
            .collect::<Result<_>>()?;
        let refs: Vec<&VelocityWindow> = normalized.iter().collect();
        let emb = embed_windows(&model.net, &refs, 64)?;
        let d = model.net.embedding_dim();
        for (dst, src) in out.iter_mut().zip(emb.chunks_exact(d)) {
            dst.extend_from_slice(src);
        }
    }
    Ok(out
        .into_iter()
        .zip(windows)
        .map(|(values, w)| EmbeddingVector {
            values,
            source: Some(w.provenance.clone()),
            model_id: model_id.clone(),
        })
        .collect())
}

/// Coordinate-wise mean; no renormalization.
pub fn centroid(embeddings: &[&[f64]]) -> Result<Vec<f64>> {
    let first = embeddings
        .first()
        .ok_or_else(|| Error::invalid("centroid of an empty set"))?;
    let dim = first.len();
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::invalid("centroid inputs differ in dimension"));
    }
    let mut acc = vec![0.0; dim];
    for e in embeddings {
        for (a, v) in acc.iter_mut().zip(e.iter()) {
            *a += v;
        }
    }
    let n = embeddings.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("cosine similarity of vectors with different lengths"));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity with a zero vector"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_cases() {
        let v = [0.3, -2.0, 5.0];
        assert_eq!(centroid(&[&v]).unwrap(), v.to_vec());
        assert_eq!(centroid(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(centroid(&[&v, &v, &v]).unwrap(), v.to_vec());
        assert!(centroid(&[]).is_err());
        assert!(centroid(&[&[1.0], &[1.0, 2.0]]).is_err());
    }

    #[test]
    fn cosine_cases() {
        let v = [0.3, -2.0, 5.0];
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&v, &v2).unwrap() - 1.0).abs() < 1e-15);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }
}
