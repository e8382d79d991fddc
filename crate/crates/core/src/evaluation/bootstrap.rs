use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::roc::{ScoreHistogram, ScoreSet};
use crate::error::{Error, Result};

pub const FAR_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub genuine_draws: usize,
    pub impostor_draws: usize,
    pub replicates: usize,
    pub seed: u64,
    pub far_grid: Vec<f64>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            genuine_draws: 20_000,
            impostor_draws: 20_000,
            replicates: 1000,
            seed: 0,
            far_grid: FAR_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Population standard deviation.
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanSd { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub replicates: usize,
    pub eer: MeanSd,
    pub frr_at_far: Vec<(f64, MeanSd)>,
    pub eer_samples: Vec<f64>,
}

/// Count-level resampling of genuine and impostor scores.
#[derive(Debug, Clone)]
pub struct Bootstrapper {
    histogram: ScoreHistogram,
    genuine_slots: Vec<usize>,
    impostor_slots: Vec<usize>,
    config: BootstrapConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub genuine_counts: Vec<u64>,
    pub impostor_counts: Vec<u64>,
}

impl Replicate {
    pub fn genuine_total(&self) -> u64 {
        self.genuine_counts.iter().sum()
    }

    pub fn impostor_total(&self) -> u64 {
        self.impostor_counts.iter().sum()
    }
}

impl Bootstrapper {
    pub fn new(scores: &ScoreSet, config: BootstrapConfig) -> Result<Self> {
        if scores.genuine.is_empty() || scores.impostor.is_empty() {
            return Err(Error::MetricUnavailable("bootstrap needs genuine and impostor scores".into()));
        }
        if config.replicates == 0 || config.genuine_draws == 0 || config.impostor_draws == 0 {
            return Err(Error::invalid("bootstrap replicates and draw counts must be positive"));
        }
        if config.far_grid.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::invalid("FAR grid values must lie in (0, 1]"));
        }
        if scores.genuine.iter().chain(&scores.impostor).any(|s| s.is_nan()) {
            return Err(Error::invalid("score set contains NaN"));
        }
        let histogram = ScoreHistogram::from_scores(scores);
        let genuine_slots = scores.genuine.iter().map(|&s| histogram.slot_of(s)).collect();
        let impostor_slots = scores.impostor.iter().map(|&s| histogram.slot_of(s)).collect();
        Ok(Bootstrapper {
            histogram,
            genuine_slots,
            impostor_slots,
            config,
        })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.config
    }

    /// Replicate `rep` depends only on the seed and `rep`.
    pub fn replicate(&self, rep: usize) -> Replicate {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(rep as u64);
        let slots = self.histogram.values.len();
        let mut genuine_counts = vec![0u64; slots];
        let mut impostor_counts = vec![0u64; slots];
        for _ in 0..self.config.genuine_draws {
            let i = rng.random_range(0..self.genuine_slots.len());
            genuine_counts[self.genuine_slots[i]] += 1;
        }
        for _ in 0..self.config.impostor_draws {
            let i = rng.random_range(0..self.impostor_slots.len());
            impostor_counts[self.impostor_slots[i]] += 1;
        }
        Replicate {
            genuine_counts,
            impostor_counts,
        }
    }

    /// EER followed by FRR at each grid FAR for one replicate.
    pub fn replicate_metrics(&self, rep: usize) -> (f64, Vec<f64>) {
        let r = self.replicate(rep);
        let roc = self.histogram.roc_with_counts(&r.genuine_counts, &r.impostor_counts);
        let frr = self
            .config
            .far_grid
            .iter()
            .map(|&f| roc.frr_at_far(f).expect("grid validated"))
            .collect();
        (roc.eer(), frr)
    }

    pub fn run(&self) -> BootstrapReport {
        let reps = self.config.replicates;
        let mut eers = Vec::with_capacity(reps);
        let mut frrs: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); self.config.far_grid.len()];
        for rep in 0..reps {
            let (e, f) = self.replicate_metrics(rep);
            eers.push(e);
            for (col, v) in frrs.iter_mut().zip(f) {
                col.push(v);
            }
        }
        BootstrapReport {
            replicates: reps,
            eer: MeanSd::of(&eers),
            frr_at_far: self
                .config
                .far_grid
                .iter()
                .zip(&frrs)
                .map(|(&f, col)| (f, MeanSd::of(col)))
                .collect(),
            eer_samples: eers,
        }
    }
}

pub fn bootstrap_metrics(scores: &ScoreSet, config: BootstrapConfig) -> Result<BootstrapReport> {
    Ok(Bootstrapper::new(scores, config)?.run())
}
