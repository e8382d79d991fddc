use crate::error::{Error, Result};

/// Row-wise L2 normalization of an `m x dim` matrix. Returns the normalized
/// rows and the original norms (floored at `1e-12`).
pub fn l2_normalize_rows(embeddings: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut unit = embeddings.to_vec();
    let mut norms = Vec::with_capacity(embeddings.len() / dim.max(1));
    for row in unit.chunks_exact_mut(dim) {
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        row.iter_mut().for_each(|v| *v /= n);
        norms.push(n);
    }
    (unit, norms)
}

/// Pairwise cosine similarities of a minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    m: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_embeddings(embeddings: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || embeddings.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} values do not form rows of width {dim}",
                embeddings.len()
            )));
        }
        let (unit, _) = l2_normalize_rows(embeddings, dim);
        Ok(Self::from_unit_rows(&unit, dim))
    }

    pub(crate) fn from_unit_rows(unit: &[f64], dim: usize) -> Self {
        let m = unit.len() / dim;
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            let a = &unit[i * dim..][..dim];
            for k in i..m {
                let b = &unit[k * dim..][..dim];
                let s = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0);
                data[i * m + k] = s;
                data[k * m + i] = s;
            }
        }
        SimilarityMatrix { m, data }
    }

    /// Wraps an explicit square matrix (used for hand-built cases).
    pub fn from_matrix(m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::invalid(format!(
                "similarity matrix needs {} entries, got {}",
                m * m,
                data.len()
            )));
        }
        Ok(SimilarityMatrix { m, data })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.m + k]
    }

    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.data[i * self.m + k] = v;
    }
}
