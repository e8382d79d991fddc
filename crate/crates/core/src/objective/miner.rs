use crate::error::{Error, Result};
use crate::objective::similarity::SimilarityMatrix;

/// Mined positive and negative partners per anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSets {
    pub positives: Vec<Vec<usize>>,
    pub negatives: Vec<Vec<usize>>,
}

impl PairSets {
    pub fn empty(m: usize) -> Self {
        PairSets {
            positives: vec![Vec::new(); m],
            negatives: vec![Vec::new(); m],
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.positives.iter().chain(&self.negatives).map(Vec::len).sum()
    }
}

/// Online multi-similarity pair mining.
///
/// A positive `p` of anchor `i` is kept when `S_ip < max_n S_in + epsilon`;
/// a negative `n` is kept when `S_in > min_p S_ip - epsilon`. Anchors
/// without any candidate positive or without any candidate negative get
/// no pairs at all.
pub fn mine_pairs<L: PartialEq>(
    sim: &SimilarityMatrix,
    labels: &[L],
    epsilon: f64,
) -> Result<PairSets> {
    let m = sim.size();
    if labels.len() != m {
        return Err(Error::invalid(format!(
            "{} labels for a {m}x{m} similarity matrix",
            labels.len()
        )));
    }
    if m < 2 {
        return Err(Error::invalid("pair mining needs at least two samples"));
    }
    let mut pairs = PairSets::empty(m);
    for i in 0..m {
        let mut hardest_pos = f64::INFINITY;
        let mut hardest_neg = f64::NEG_INFINITY;
        let mut any_pos = false;
        let mut any_neg = false;
        for k in (0..m).filter(|&k| k != i) {
            let s = sim.get(i, k);
            if labels[k] == labels[i] {
                any_pos = true;
                hardest_pos = hardest_pos.min(s);
            } else {
                any_neg = true;
                hardest_neg = hardest_neg.max(s);
            }
        }
        if !(any_pos && any_neg) {
            continue;
        }
        for k in (0..m).filter(|&k| k != i) {
            let s = sim.get(i, k);
            if labels[k] == labels[i] {
                if s < hardest_neg + epsilon {
                    pairs.positives[i].push(k);
                }
            } else if s > hardest_pos - epsilon {
                pairs.negatives[i].push(k);
            }
        }
    }
    Ok(pairs)
}
