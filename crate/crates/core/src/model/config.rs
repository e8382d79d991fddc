use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dilations cycle through `1, 2, 4, ..., 64` and then restart.
pub const DILATION_PERIOD: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureConfig {
    pub input_channels: usize,
    pub num_conv_layers: usize,
    pub growth_rate: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub embedding_dim: usize,
    /// Output size of the optional classification head.
    pub num_classes: Option<usize>,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            input_channels: 2,
            num_conv_layers: 8,
            growth_rate: 32,
            kernel_size: 3,
            stride: 1,
            embedding_dim: 128,
            num_classes: None,
        }
    }
}

impl ArchitectureConfig {
    pub fn with_classes(mut self, num_classes: usize) -> Self {
        self.num_classes = Some(num_classes);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_channels", self.input_channels),
            ("num_conv_layers", self.num_conv_layers),
            ("growth_rate", self.growth_rate),
            ("embedding_dim", self.embedding_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.stride != 1 {
            return Err(Error::Unsupported(format!(
                "only stride 1 preserves sequence length, got {}",
                self.stride
            )));
        }
        if self.num_classes == Some(0) {
            return Err(Error::invalid("num_classes must be at least 1"));
        }
        Ok(())
    }

    /// Dilation of conv layer `n` (1-based).
    pub fn dilation(&self, n: usize) -> usize {
        1 << ((n - 1) % DILATION_PERIOD)
    }

    pub fn dilations(&self) -> Vec<usize> {
        (1..=self.num_conv_layers).map(|n| self.dilation(n)).collect()
    }

    /// Zero padding per side for layer `n`; equals the dilation when `k = 3`.
    pub fn padding(&self, n: usize) -> usize {
        self.dilation(n) * (self.kernel_size - 1) / 2
    }

    /// Input channels of conv layer `n` under dense connectivity.
    pub fn layer_input_channels(&self, n: usize) -> usize {
        self.input_channels + self.growth_rate * (n - 1)
    }

    /// Channels reaching the global pooling layer.
    pub fn final_channels(&self) -> usize {
        self.input_channels + self.growth_rate * self.num_conv_layers
    }

    /// `r_n = 1 + sum_{i<=n} d_i (k - 1)`.
    pub fn receptive_field(&self, n: usize) -> Result<usize> {
        if n == 0 || n > self.num_conv_layers {
            return Err(Error::invalid(format!(
                "layer index {n} outside 1..={}",
                self.num_conv_layers
            )));
        }
        Ok(1 + (1..=n)
            .map(|i| self.dilation(i) * (self.kernel_size - 1))
            .sum::<usize>())
    }

    /// Closed-form learnable-scalar count. Conv layers carry no bias.
    pub fn count_parameters(&self, include_head: bool) -> Result<usize> {
        self.validate()?;
        let k = self.kernel_size;
        let g = self.growth_rate;
        let convs: usize = (1..=self.num_conv_layers)
            .map(|n| self.layer_input_channels(n) * g * k)
            .sum();
        let pre_norms: usize = (2..=self.num_conv_layers)
            .map(|n| 2 * self.layer_input_channels(n))
            .sum();
        let final_norm = 2 * self.final_channels();
        let embedding = self.final_channels() * self.embedding_dim + self.embedding_dim;
        let mut total = convs + pre_norms + final_norm + embedding;
        if include_head {
            let classes = self.num_classes.ok_or_else(|| {
                Error::Unsupported("no classification head configured".into())
            })?;
            total += 2 * self.embedding_dim + self.embedding_dim * classes + classes;
        }
        Ok(total)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
