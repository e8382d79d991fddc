use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::config::ArchitectureConfig;
use crate::model::layers::{BatchNorm, Conv1d, Linear, NormCache, Param};

/// Optional classifier: normalization, rectifier, then a linear map to logits.
#[derive(Debug, Clone)]
pub struct ClassifierHead {
    pub norm: BatchNorm,
    pub linear: Linear,
}

/// Pre-activation dense-block network mapping `C x T` windows to embeddings.
///
/// Conv layer `n` reads the concatenation of the input and every earlier
/// layer's output. Every conv after the first, the pooling stage and the
/// classifier are preceded by batch norm and a rectifier.
#[derive(Debug, Clone)]
pub struct EmbeddingNet {
    config: ArchitectureConfig,
    pub convs: Vec<Conv1d>,
    /// Norm before conv layer `n` lives at index `n - 2`.
    pub pre_norms: Vec<BatchNorm>,
    pub final_norm: BatchNorm,
    pub embedding: Linear,
    pub head: Option<ClassifierHead>,
}

/// Everything a training forward pass keeps for backward.
#[derive(Debug)]
pub struct TrainPass {
    batch: usize,
    len: usize,
    input: Vec<f64>,
    features: Vec<f64>,
    /// Rectified normalized inputs of conv layers 2..=L.
    activations: Vec<Vec<f64>>,
    pre_caches: Vec<NormCache>,
    final_act: Vec<f64>,
    final_cache: NormCache,
    pooled: Vec<f64>,
    pub embeddings: Vec<f64>,
    head_act: Option<(Vec<f64>, NormCache)>,
    pub logits: Option<Vec<f64>>,
}

impl EmbeddingNet {
    /// Builds and initializes a network; weights are fully determined by `seed`.
    pub fn new(config: ArchitectureConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let convs = (1..=config.num_conv_layers)
            .map(|n| {
                Conv1d::new(
                    config.layer_input_channels(n),
                    config.growth_rate,
                    config.kernel_size,
                    config.dilation(n),
                    &mut rng,
                )
            })
            .collect();
        let pre_norms = (2..=config.num_conv_layers)
            .map(|n| BatchNorm::new(config.layer_input_channels(n)))
            .collect();
        let final_norm = BatchNorm::new(config.final_channels());
        let embedding = Linear::new(config.final_channels(), config.embedding_dim, &mut rng);
        let head = config.num_classes.map(|classes| ClassifierHead {
            norm: BatchNorm::new(config.embedding_dim),
            linear: Linear::new(config.embedding_dim, classes, &mut rng),
        });
        Ok(EmbeddingNet {
            config,
            convs,
            pre_norms,
            final_norm,
            embedding,
            head,
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.embedding_dim
    }

    /// Learnable arrays in a fixed order.
    pub fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.convs.iter().map(|c| &c.weight).collect();
        for bn in self.pre_norms.iter().chain(std::iter::once(&self.final_norm)) {
            out.push(&bn.weight);
            out.push(&bn.bias);
        }
        out.push(&self.embedding.weight);
        out.push(&self.embedding.bias);
        if let Some(h) = &self.head {
            out.extend([&h.norm.weight, &h.norm.bias, &h.linear.weight, &h.linear.bias]);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.convs.iter_mut().map(|c| &mut c.weight).collect();
        for bn in self
            .pre_norms
            .iter_mut()
            .chain(std::iter::once(&mut self.final_norm))
        {
            out.push(&mut bn.weight);
            out.push(&mut bn.bias);
        }
        out.push(&mut self.embedding.weight);
        out.push(&mut self.embedding.bias);
        if let Some(h) = &mut self.head {
            out.push(&mut h.norm.weight);
            out.push(&mut h.norm.bias);
            out.push(&mut h.linear.weight);
            out.push(&mut h.linear.bias);
        }
        out
    }

    /// Running statistics of every batch norm, in a fixed order.
    pub fn buffers(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        let head_norm = self.head.as_ref().map(|h| &h.norm);
        for bn in self
            .pre_norms
            .iter()
            .chain(std::iter::once(&self.final_norm))
            .chain(head_norm)
        {
            out.push(&bn.running_mean);
            out.push(&bn.running_var);
        }
        out
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        let head_norm = self.head.as_mut().map(|h| &mut h.norm);
        for bn in self
            .pre_norms
            .iter_mut()
            .chain(std::iter::once(&mut self.final_norm))
            .chain(head_norm)
        {
            out.push(&mut bn.running_mean);
            out.push(&mut bn.running_var);
        }
        out
    }

    /// Learnable scalars, counted by walking the arrays.
    pub fn num_parameters(&self, include_head: bool) -> usize {
        let head: usize = self
            .head
            .as_ref()
            .map(|h| h.norm.weight.len() + h.norm.bias.len() + h.linear.weight.len() + h.linear.bias.len())
            .unwrap_or(0);
        let all: usize = self.params().iter().map(|p| p.len()).sum();
        if include_head {
            all
        } else {
            all - head
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn check_input(&self, input: &[f64], batch: usize, len: usize) -> Result<()> {
        let c = self.config.input_channels;
        if batch == 0 || len == 0 {
            return Err(Error::invalid("input must have at least one sample and one time step"));
        }
        if input.len() != batch * c * len {
            return Err(Error::invalid(format!(
                "input has {} values, expected {batch} x {c} x {len}",
                input.len()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("input contains non-finite values"));
        }
        Ok(())
    }

    fn scatter(features: &mut [f64], total: usize, offset: usize, block: &[f64], width: usize, batch: usize, len: usize) {
        for b in 0..batch {
            let src = &block[b * width * len..][..width * len];
            features[(b * total + offset) * len..][..width * len].copy_from_slice(src);
        }
    }

    fn gather(features: &[f64], total: usize, offset: usize, width: usize, batch: usize, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(batch * width * len);
        for b in 0..batch {
            out.extend_from_slice(&features[(b * total + offset) * len..][..width * len]);
        }
        out
    }

    fn seed_features(&self, input: &[f64], batch: usize, len: usize) -> Vec<f64> {
        let total = self.config.final_channels();
        let c = self.config.input_channels;
        let mut features = vec![0.0; batch * total * len];
        Self::scatter(&mut features, total, 0, input, c, batch, len);
        features
    }

    fn pool(act: &[f64], channels: usize, batch: usize, len: usize) -> Vec<f64> {
        act.chunks_exact(len)
            .take(batch * channels)
            .map(|row| row.iter().sum::<f64>() / len as f64)
            .collect()
    }

    /// Inference-mode embeddings for `batch` windows laid out
    /// `batch x C x T`. Uses running normalization statistics.
    pub fn embed(&self, input: &[f64], batch: usize, len: usize) -> Result<Vec<f64>> {
        let (pooled, _) = self.pooled_features(input, batch, len)?;
        Ok(self.embedding.forward(&pooled, batch))
    }

    /// Globally pooled block features (`batch x final_channels`) in
    /// inference mode, with the largest absolute pre-pool activation.
    pub fn pooled_features(&self, input: &[f64], batch: usize, len: usize) -> Result<(Vec<f64>, f64)> {
        self.check_input(input, batch, len)?;
        let cfg = &self.config;
        let total = cfg.final_channels();
        let g = cfg.growth_rate;
        let mut features = self.seed_features(input, batch, len);
        for (idx, conv) in self.convs.iter().enumerate() {
            let n = idx + 1;
            let c_in = cfg.layer_input_channels(n);
            let out = if n == 1 {
                conv.forward(&features, total, batch, len)
            } else {
                let act = self.pre_norms[idx - 1].forward_eval(&features, total, batch, len);
                conv.forward(&act, c_in, batch, len)
            };
            Self::scatter(&mut features, total, c_in, &out, g, batch, len);
        }
        let act = self.final_norm.forward_eval(&features, total, batch, len);
        let peak = act.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok((Self::pool(&act, total, batch, len), peak))
    }

    /// Inference-mode class logits.
    pub fn classify(&self, input: &[f64], batch: usize, len: usize) -> Result<Vec<f64>> {
        let head = self
            .head
            .as_ref()
            .ok_or_else(|| Error::Unsupported("network has no classification head".into()))?;
        let emb = self.embed(input, batch, len)?;
        let act = head.norm.forward_eval(&emb, self.config.embedding_dim, batch, 1);
        Ok(head.linear.forward(&act, batch))
    }

    /// Training-mode forward pass. Batch statistics are used for
    /// normalization and folded into the running estimates.
    pub fn forward_train(&mut self, input: &[f64], batch: usize, len: usize) -> Result<TrainPass> {
        self.check_input(input, batch, len)?;
        let total = self.config.final_channels();
        let g = self.config.growth_rate;
        let mut features = self.seed_features(input, batch, len);
        let mut activations = Vec::with_capacity(self.convs.len().saturating_sub(1));
        let mut pre_caches = Vec::with_capacity(self.convs.len().saturating_sub(1));
        for idx in 0..self.convs.len() {
            let n = idx + 1;
            let c_in = self.config.layer_input_channels(n);
            let out = if n == 1 {
                self.convs[0].forward(&features, total, batch, len)
            } else {
                let (act, cache, upd) = self.pre_norms[idx - 1].forward_train(&features, total, batch, len);
                self.pre_norms[idx - 1].update_running(&upd);
                let out = self.convs[idx].forward(&act, c_in, batch, len);
                activations.push(act);
                pre_caches.push(cache);
                out
            };
            Self::scatter(&mut features, total, c_in, &out, g, batch, len);
        }
        let (final_act, final_cache, upd) = self.final_norm.forward_train(&features, total, batch, len);
        self.final_norm.update_running(&upd);
        let pooled = Self::pool(&final_act, total, batch, len);
        let embeddings = self.embedding.forward(&pooled, batch);

        let emb_dim = self.config.embedding_dim;
        let (head_act, logits) = match self.head.as_mut() {
            Some(head) => {
                let (act, cache, upd) = head.norm.forward_train(&embeddings, emb_dim, batch, 1);
                head.norm.update_running(&upd);
                let logits = head.linear.forward(&act, batch);
                (Some((act, cache)), Some(logits))
            }
            None => (None, None),
        };
        Ok(TrainPass {
            batch,
            len,
            input: input.to_vec(),
            features,
            activations,
            pre_caches,
            final_act,
            final_cache,
            pooled,
            embeddings,
            head_act,
            logits,
        })
    }

    /// Accumulates parameter gradients given gradients of the loss with
    /// respect to the embeddings and (if a head exists) the logits.
    pub fn backward(&mut self, pass: &TrainPass, d_embeddings: &[f64], d_logits: Option<&[f64]>) -> Result<()> {
        let (batch, len) = (pass.batch, pass.len);
        let emb_dim = self.config.embedding_dim;
        let total = self.config.final_channels();
        let g = self.config.growth_rate;
        if d_embeddings.len() != batch * emb_dim {
            return Err(Error::invalid("embedding gradient has the wrong shape"));
        }
        let mut d_emb = d_embeddings.to_vec();
        if let (Some(d_logits), Some(head), Some((act, cache))) = (d_logits, self.head.as_mut(), pass.head_act.as_ref()) {
            let d_act = head.linear.backward(act, d_logits, batch);
            head.norm.backward(&pass.embeddings, emb_dim, act, &d_act, cache, batch, 1, &mut d_emb);
        } else if d_logits.is_some() {
            return Err(Error::Unsupported("logit gradient given but no head was run".into()));
        }

        let d_pooled = self.embedding.backward(&pass.pooled, &d_emb, batch);
        let inv_len = 1.0 / len as f64;
        let d_final_act: Vec<f64> = d_pooled
            .iter()
            .flat_map(|&d| std::iter::repeat_n(d * inv_len, len))
            .collect();
        let mut d_features = vec![0.0; batch * total * len];
        self.final_norm.backward(
            &pass.features,
            total,
            &pass.final_act,
            &d_final_act,
            &pass.final_cache,
            batch,
            len,
            &mut d_features,
        );

        for idx in (0..self.convs.len()).rev() {
            let n = idx + 1;
            let c_in = self.config.layer_input_channels(n);
            let d_out = Self::gather(&d_features, total, c_in, g, batch, len);
            if n == 1 {
                self.convs[0].backward(&pass.features, total, &d_out, batch, len, false);
            } else {
                let act = &pass.activations[idx - 1];
                let d_act = self.convs[idx]
                    .backward(act, c_in, &d_out, batch, len, true)
                    .expect("input gradient requested");
                self.pre_norms[idx - 1].backward(
                    &pass.features,
                    total,
                    act,
                    &d_act,
                    &pass.pre_caches[idx - 1],
                    batch,
                    len,
                    &mut d_features,
                );
            }
        }
        debug_assert_eq!(pass.input.len(), batch * self.config.input_channels * len);
        Ok(())
    }
}
