use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::miner::{mine_pairs, PairSets};
use crate::objective::similarity::{l2_normalize_rows, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Miner margin.
    pub epsilon: f64,
    pub w_ms: f64,
    pub w_ce: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 2.0,
            beta: 50.0,
            lambda: 0.5,
            epsilon: 0.1,
            w_ms: 1.0,
            w_ce: 0.1,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::invalid("alpha and beta must be positive"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid("lambda must lie in [0, 1]"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        Ok(())
    }
}

/// `log(1 + sum exp(a_k))` and the weights `exp(a_k) / (1 + sum exp(a_j))`.
fn soft_plus_sum(args: &[f64]) -> (f64, Vec<f64>) {
    let top = args.iter().copied().fold(0.0f64, f64::max);
    let base = (-top).exp();
    let exps: Vec<f64> = args.iter().map(|a| (a - top).exp()).collect();
    let denom = base + exps.iter().sum::<f64>();
    (top + denom.ln(), exps.into_iter().map(|e| e / denom).collect())
}

fn check_pairs(sim: &SimilarityMatrix, pairs: &PairSets) -> Result<()> {
    let m = sim.size();
    if pairs.positives.len() != m || pairs.negatives.len() != m {
        return Err(Error::invalid("pair sets do not match the batch size"));
    }
    if pairs.positives.iter().chain(&pairs.negatives).flatten().any(|&k| k >= m) {
        return Err(Error::invalid("pair index out of range"));
    }
    Ok(())
}

/// Multi-similarity loss and its gradient with respect to every `S_ik`
/// (row-major `m x m`).
pub fn ms_loss_with_sim_grad(
    sim: &SimilarityMatrix,
    pairs: &PairSets,
    alpha: f64,
    beta: f64,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_pairs(sim, pairs)?;
    let m = sim.size();
    let mut grad = vec![0.0; m * m];
    let mut total = 0.0;
    for i in 0..m {
        let pos = &pairs.positives[i];
        let neg = &pairs.negatives[i];
        if !pos.is_empty() {
            let args: Vec<f64> = pos.iter().map(|&k| -alpha * (sim.get(i, k) - lambda)).collect();
            let (v, w) = soft_plus_sum(&args);
            total += v / alpha;
            for (&k, wk) in pos.iter().zip(w) {
                grad[i * m + k] -= wk / m as f64;
            }
        }
        if !neg.is_empty() {
            let args: Vec<f64> = neg.iter().map(|&k| beta * (sim.get(i, k) - lambda)).collect();
            let (v, w) = soft_plus_sum(&args);
            total += v / beta;
            for (&k, wk) in neg.iter().zip(w) {
                grad[i * m + k] += wk / m as f64;
            }
        }
    }
    Ok((total / m as f64, grad))
}

pub fn ms_loss(sim: &SimilarityMatrix, pairs: &PairSets, alpha: f64, beta: f64, lambda: f64) -> Result<f64> {
    ms_loss_with_sim_grad(sim, pairs, alpha, beta, lambda).map(|(l, _)| l)
}

/// Mines pairs on the batch and returns the multi-similarity loss together
/// with its gradient with respect to the raw (unnormalized) embeddings.
pub fn ms_loss_embeddings<L: PartialEq>(
    embeddings: &[f64],
    dim: usize,
    labels: &[L],
    config: &LossConfig,
) -> Result<(f64, Vec<f64>)> {
    if dim == 0 || embeddings.len() != labels.len() * dim {
        return Err(Error::invalid("embedding matrix does not match label count"));
    }
    let m = labels.len();
    let (unit, norms) = l2_normalize_rows(embeddings, dim);
    let sim = SimilarityMatrix::from_unit_rows(&unit, dim);
    let pairs = mine_pairs(&sim, labels, config.epsilon)?;
    let (loss, g) = ms_loss_with_sim_grad(&sim, &pairs, config.alpha, config.beta, config.lambda)?;

    let mut d_unit = vec![0.0; m * dim];
    for i in 0..m {
        for k in 0..m {
            let gik = g[i * m + k];
            if gik == 0.0 {
                continue;
            }
            for d in 0..dim {
                d_unit[i * dim + d] += gik * unit[k * dim + d];
                d_unit[k * dim + d] += gik * unit[i * dim + d];
            }
        }
    }
    // back through x / |x|
    let mut d_emb = vec![0.0; m * dim];
    for i in 0..m {
        let u = &unit[i * dim..][..dim];
        let du = &d_unit[i * dim..][..dim];
        let proj: f64 = u.iter().zip(du).map(|(a, b)| a * b).sum();
        for d in 0..dim {
            d_emb[i * dim + d] = (du[d] - u[d] * proj) / norms[i];
        }
    }
    Ok((loss, d_emb))
}

/// Mean categorical cross-entropy of `m x classes` logits and its gradient.
pub fn ce_loss_with_grad(logits: &[f64], classes: usize, targets: &[usize]) -> Result<(f64, Vec<f64>)> {
    if classes == 0 || logits.len() != targets.len() * classes {
        return Err(Error::invalid("logit matrix does not match target count"));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::invalid(format!("target {bad} outside 0..{classes}")));
    }
    let m = targets.len();
    if m == 0 {
        return Err(Error::invalid("empty batch"));
    }
    let mut grad = vec![0.0; logits.len()];
    let mut total = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let row = &logits[i * classes..][..classes];
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|x| (x - top).exp()).sum();
        let lse = top + sum.ln();
        total += lse - row[y];
        for (j, x) in row.iter().enumerate() {
            grad[i * classes + j] = (x - lse).exp() / m as f64;
        }
        grad[i * classes + y] -= 1.0 / m as f64;
    }
    Ok((total / m as f64, grad))
}

pub fn ce_loss(logits: &[f64], classes: usize, targets: &[usize]) -> Result<f64> {
    ce_loss_with_grad(logits, classes, targets).map(|(l, _)| l)
}

/// `w_ms * L_ms + w_ce * L_ce`.
pub fn combined_loss(ms: f64, ce: f64, w_ms: f64, w_ce: f64) -> f64 {
    w_ms * ms + w_ce * ce
}
