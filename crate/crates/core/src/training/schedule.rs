use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-cycle cosine schedule: a half-cosine rise from `lr_start` to `lr_max`
/// over the warmup, then a half-cosine decay to `lr_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OneCycleSchedule {
    pub lr_start: f64,
    pub lr_max: f64,
    pub lr_end: f64,
    pub warmup_epochs: f64,
    pub total_epochs: f64,
}

impl Default for OneCycleSchedule {
    fn default() -> Self {
        OneCycleSchedule {
            lr_start: 1e-4,
            lr_max: 1e-2,
            lr_end: 1e-7,
            warmup_epochs: 30.0,
            total_epochs: 100.0,
        }
    }
}

impl OneCycleSchedule {
    /// Same shape compressed or stretched to `total_epochs`, keeping the
    /// warmup fraction.
    pub fn scaled_to(&self, total_epochs: usize) -> Self {
        let frac = self.warmup_epochs / self.total_epochs;
        OneCycleSchedule {
            warmup_epochs: frac * total_epochs as f64,
            total_epochs: total_epochs as f64,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.lr_start, self.lr_max, self.lr_end];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("learning rates must be positive and finite"));
        }
        if !(self.warmup_epochs >= 0.0 && self.warmup_epochs <= self.total_epochs) {
            return Err(Error::invalid(format!(
                "warmup of {} epochs outside [0, {}]",
                self.warmup_epochs, self.total_epochs
            )));
        }
        Ok(())
    }

    /// Learning rate at fractional epoch `e` in `[0, total_epochs]`.
    pub fn lr_at(&self, e: f64) -> Result<f64> {
        if !(0.0..=self.total_epochs).contains(&e) {
            return Err(Error::invalid(format!(
                "epoch {e} outside [0, {}]",
                self.total_epochs
            )));
        }
        use std::f64::consts::PI;
        let lr = if e <= self.warmup_epochs {
            let phase = if self.warmup_epochs > 0.0 { e / self.warmup_epochs } else { 1.0 };
            self.lr_start + (self.lr_max - self.lr_start) * (1.0 - (PI * phase).cos()) / 2.0
        } else {
            let phase = (e - self.warmup_epochs) / (self.total_epochs - self.warmup_epochs);
            self.lr_end + (self.lr_max - self.lr_end) * (1.0 + (PI * phase).cos()) / 2.0
        };
        Ok(lr)
    }
}
