use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Genuine and impostor similarity scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Self {
        ScoreSet { genuine, impostor }
    }

    pub fn positives(&self) -> usize {
        self.genuine.len()
    }

    pub fn negatives(&self) -> usize {
        self.impostor.len()
    }

    fn check(&self) -> Result<()> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::MetricUnavailable(format!(
                "need genuine and impostor scores, have P={} N={}",
                self.genuine.len(),
                self.impostor.len()
            )));
        }
        if self.genuine.iter().chain(&self.impostor).any(|s| s.is_nan()) {
            return Err(Error::invalid("score set contains NaN"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub frr: f64,
    pub far: f64,
}

/// Operating points ordered by increasing threshold, bracketed by the
/// accept-all (`-inf`) and reject-all (`+inf`) sentinels. A score is
/// accepted when it is at least the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Distinct sorted score values with how many genuine and impostor scores
/// sit at each.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    pub values: Vec<f64>,
    pub genuine: Vec<u64>,
    pub impostor: Vec<u64>,
}

impl ScoreHistogram {
    pub fn from_scores(scores: &ScoreSet) -> Self {
        let mut tagged: Vec<(f64, bool)> = scores
            .genuine
            .iter()
            .map(|&s| (s, true))
            .chain(scores.impostor.iter().map(|&s| (s, false)))
            .collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut hist = ScoreHistogram {
            values: Vec::new(),
            genuine: Vec::new(),
            impostor: Vec::new(),
        };
        for (s, is_genuine) in tagged {
            if hist.values.last() != Some(&s) {
                hist.values.push(s);
                hist.genuine.push(0);
                hist.impostor.push(0);
            }
            let slot = hist.values.len() - 1;
            if is_genuine {
                hist.genuine[slot] += 1;
            } else {
                hist.impostor[slot] += 1;
            }
        }
        hist
    }

    /// Index of each value in `values` (which must be sorted and contain it).
    pub fn slot_of(&self, score: f64) -> usize {
        self.values
            .binary_search_by(|v| v.total_cmp(&score))
            .expect("score present in histogram")
    }

    pub fn roc_with_counts(&self, genuine: &[u64], impostor: &[u64]) -> RocCurve {
        let p: u64 = genuine.iter().sum();
        let n: u64 = impostor.iter().sum();
        let (p, n) = (p as f64, n as f64);
        let mut points = Vec::with_capacity(self.values.len() + 2);
        points.push(RocPoint {
            threshold: f64::NEG_INFINITY,
            frr: 0.0,
            far: 1.0,
        });
        let mut rejected_genuine = 0u64;
        let mut accepted_impostor: u64 = impostor.iter().sum();
        for (i, &t) in self.values.iter().enumerate() {
            if genuine[i] == 0 && impostor[i] == 0 {
                continue;
            }
            points.push(RocPoint {
                threshold: t,
                frr: rejected_genuine as f64 / p,
                far: accepted_impostor as f64 / n,
            });
            rejected_genuine += genuine[i];
            accepted_impostor -= impostor[i];
        }
        points.push(RocPoint {
            threshold: f64::INFINITY,
            frr: 1.0,
            far: 0.0,
        });
        RocCurve { points }
    }

    pub fn roc(&self) -> RocCurve {
        self.roc_with_counts(&self.genuine, &self.impostor)
    }
}

pub fn compute_roc(scores: &ScoreSet) -> Result<RocCurve> {
    scores.check()?;
    Ok(ScoreHistogram::from_scores(scores).roc())
}

/// Location of the FRR = FAR crossing between two adjacent curve points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub lower: RocPoint,
    pub upper: RocPoint,
    /// Fraction of the way from `lower` to `upper`.
    pub fraction: f64,
    pub rate: f64,
}

impl RocCurve {
    /// First exact equality, otherwise the first sign change of FRR - FAR
    /// with both rates interpolated linearly between the bracketing points.
    pub fn eer_crossing(&self) -> Crossing {
        for p in &self.points {
            if p.frr == p.far {
                return Crossing {
                    lower: *p,
                    upper: *p,
                    fraction: 0.0,
                    rate: p.frr,
                };
            }
        }
        for pair in self.points.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (da, db) = (a.frr - a.far, b.frr - b.far);
            if da < 0.0 && db > 0.0 {
                let fraction = da / (da - db);
                let rate = a.frr + fraction * (b.frr - a.frr);
                return Crossing {
                    lower: a,
                    upper: b,
                    fraction,
                    rate,
                };
            }
        }
        unreachable!("curve runs from FRR-FAR = -1 to +1")
    }

    pub fn eer(&self) -> f64 {
        self.eer_crossing().rate
    }

    /// Smallest FRR among operating points whose FAR does not exceed the target.
    pub fn frr_at_far(&self, far_target: f64) -> Result<f64> {
        if !(far_target > 0.0 && far_target <= 1.0) {
            return Err(Error::invalid(format!("FAR target {far_target} outside (0, 1]")));
        }
        Ok(self
            .points
            .iter()
            .filter(|p| p.far <= far_target)
            .map(|p| p.frr)
            .fold(f64::INFINITY, f64::min))
    }
}

pub fn eer(roc: &RocCurve) -> f64 {
    roc.eer()
}

pub fn frr_at_far(roc: &RocCurve, far_target: f64) -> Result<f64> {
    roc.frr_at_far(far_target)
}
