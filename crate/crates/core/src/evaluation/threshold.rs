use super::roc::{compute_roc, ScoreSet};
use crate::error::Result;

/// Threshold at the EER crossing, interpolated between the two bracketing
/// thresholds. A sentinel endpoint is replaced by the next float beyond
/// the finite one.
pub fn fit_threshold_eer(scores: &ScoreSet) -> Result<f64> {
    let c = compute_roc(scores)?.eer_crossing();
    let mut lo = c.lower.threshold;
    let mut hi = c.upper.threshold;
    if lo == f64::NEG_INFINITY {
        lo = hi.next_down();
    }
    if hi == f64::INFINITY {
        hi = lo.next_up();
    }
    if c.fraction == 0.0 {
        return Ok(lo);
    }
    Ok(lo + c.fraction * (hi - lo))
}

/// (FRR, FAR) with acceptance at `score >= threshold`.
pub fn apply_threshold(scores: &ScoreSet, threshold: f64) -> (f64, f64) {
    let rejected = scores.genuine.iter().filter(|&&s| s < threshold).count();
    let accepted = scores.impostor.iter().filter(|&&s| s >= threshold).count();
    (
        rejected as f64 / scores.genuine.len() as f64,
        accepted as f64 / scores.impostor.len() as f64,
    )
}
