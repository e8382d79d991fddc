//! Layer kernels with explicit backward passes.
//!
//! Activations are stored batch-major, then channel, then time:
//! `data[(b * channels + c) * len + t]`.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

/// A learnable array and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn new(value: Vec<f64>) -> Self {
        let grad = vec![0.0; value.len()];
        Param { value, grad }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Dilated 1D convolution without bias, zero padded to preserve length.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: Param,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
}

impl Conv1d {
    /// He-normal (fan-in) initialization.
    pub fn new<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        dilation: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = (in_channels * kernel) as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
        let weight = (0..out_channels * in_channels * kernel)
            .map(|_| normal.sample(rng))
            .collect();
        Conv1d {
            weight: Param::new(weight),
            in_channels,
            out_channels,
            kernel,
            dilation,
        }
    }

    /// Taps that fall entirely in the padding are dropped.
    fn tap_ranges(&self, len: usize) -> Vec<(usize, usize, usize, isize)> {
        let half = (self.kernel / 2) as isize;
        (0..self.kernel)
            .filter_map(|j| {
                let offset = (j as isize - half) * self.dilation as isize;
                let t0 = (-offset).max(0);
                let t1 = len as isize - offset.max(0);
                (t0 < t1).then_some((j, t0 as usize, t1 as usize, offset))
            })
            .collect()
    }

    /// `input` holds `input_total` channels per sample; the first
    /// `in_channels` of them are convolved. Returns `batch x out x len`.
    pub fn forward(&self, input: &[f64], input_total: usize, batch: usize, len: usize) -> Vec<f64> {
        let (ci, co, k) = (self.in_channels, self.out_channels, self.kernel);
        let mut out = vec![0.0; batch * co * len];
        let taps = self.tap_ranges(len);
        for b in 0..batch {
            for o in 0..co {
                let out_row = &mut out[(b * co + o) * len..][..len];
                for i in 0..ci {
                    let in_row = &input[(b * input_total + i) * len..][..len];
                    for &(j, t0, t1, off) in &taps {
                        let w = self.weight.value[(o * ci + i) * k + j];
                        let src = &in_row[(t0 as isize + off) as usize..(t1 as isize + off) as usize];
                        for (y, x) in out_row[t0..t1].iter_mut().zip(src) {
                            *y += w * x;
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight gradients and, if requested, returns the gradient
    /// with respect to the first `in_channels` input channels
    /// (`batch x in_channels x len`).
    pub fn backward(
        &mut self,
        input: &[f64],
        input_total: usize,
        d_out: &[f64],
        batch: usize,
        len: usize,
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let (ci, co, k) = (self.in_channels, self.out_channels, self.kernel);
        let mut d_in = want_input_grad.then(|| vec![0.0; batch * ci * len]);
        let taps = self.tap_ranges(len);
        for b in 0..batch {
            for o in 0..co {
                let g_row = &d_out[(b * co + o) * len..][..len];
                for i in 0..ci {
                    let in_row = &input[(b * input_total + i) * len..][..len];
                    for &(j, t0, t1, off) in &taps {
                        let (s0, s1) = ((t0 as isize + off) as usize, (t1 as isize + off) as usize);
                        let widx = (o * ci + i) * k + j;
                        let dot: f64 = g_row[t0..t1]
                            .iter()
                            .zip(&in_row[s0..s1])
                            .map(|(g, x)| g * x)
                            .sum();
                        self.weight.grad[widx] += dot;
                        if let Some(d_in) = d_in.as_mut() {
                            let w = self.weight.value[widx];
                            let dst = &mut d_in[(b * ci + i) * len..][..len];
                            for (d, g) in dst[s0..s1].iter_mut().zip(&g_row[t0..t1]) {
                                *d += w * g;
                            }
                        }
                    }
                }
            }
        }
        d_in
    }
}

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch statistics captured during a training forward pass.
#[derive(Debug, Clone)]
pub struct NormCache {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

/// Batch normalization over batch and time jointly, fused with a rectifier.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub weight: Param,
    pub bias: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub channels: usize,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            weight: Param::new(vec![1.0; channels]),
            bias: Param::new(vec![0.0; channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            channels,
        }
    }

    fn apply_relu(
        &self,
        input: &[f64],
        input_total: usize,
        batch: usize,
        len: usize,
        mean: &[f64],
        inv_std: &[f64],
    ) -> Vec<f64> {
        let c = self.channels;
        let mut out = vec![0.0; batch * c * len];
        for b in 0..batch {
            for ch in 0..c {
                let scale = self.weight.value[ch] * inv_std[ch];
                let shift = self.bias.value[ch] - mean[ch] * scale;
                let src = &input[(b * input_total + ch) * len..][..len];
                let dst = &mut out[(b * c + ch) * len..][..len];
                for (y, x) in dst.iter_mut().zip(src) {
                    *y = (x * scale + shift).max(0.0);
                }
            }
        }
        out
    }

    /// Inference: normalizes with running statistics, then rectifies.
    pub fn forward_eval(&self, input: &[f64], input_total: usize, batch: usize, len: usize) -> Vec<f64> {
        let inv_std: Vec<f64> = self
            .running_var
            .iter()
            .map(|v| 1.0 / (v + BN_EPSILON).sqrt())
            .collect();
        self.apply_relu(input, input_total, batch, len, &self.running_mean, &inv_std)
    }

    /// Training: normalizes with batch statistics. Returns the rectified
    /// output, the cache for backward, and the (mean, unbiased variance) to
    /// fold into the running estimates.
    pub fn forward_train(
        &self,
        input: &[f64],
        input_total: usize,
        batch: usize,
        len: usize,
    ) -> (Vec<f64>, NormCache, Vec<(f64, f64)>) {
        let c = self.channels;
        let n = (batch * len) as f64;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for ch in 0..c {
            let mut s = 0.0;
            for b in 0..batch {
                s += input[(b * input_total + ch) * len..][..len].iter().sum::<f64>();
            }
            let m = s / n;
            let mut ss = 0.0;
            for b in 0..batch {
                ss += input[(b * input_total + ch) * len..][..len]
                    .iter()
                    .map(|x| (x - m) * (x - m))
                    .sum::<f64>();
            }
            mean[ch] = m;
            var[ch] = ss / n;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
        let out = self.apply_relu(input, input_total, batch, len, &mean, &inv_std);
        let unbiased = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        let updates = mean
            .iter()
            .zip(&var)
            .map(|(&m, &v)| (m, v * unbiased))
            .collect();
        (out, NormCache { mean, inv_std }, updates)
    }

    pub fn update_running(&mut self, updates: &[(f64, f64)]) {
        for (ch, &(m, v)) in updates.iter().enumerate() {
            self.running_mean[ch] = (1.0 - BN_MOMENTUM) * self.running_mean[ch] + BN_MOMENTUM * m;
            self.running_var[ch] = (1.0 - BN_MOMENTUM) * self.running_var[ch] + BN_MOMENTUM * v;
        }
    }

    /// Backward through rectifier and normalization. `output` is the
    /// rectified forward output. Input gradients are added into `d_input`,
    /// which has `input_total` channels per sample.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &mut self,
        input: &[f64],
        input_total: usize,
        output: &[f64],
        d_output: &[f64],
        cache: &NormCache,
        batch: usize,
        len: usize,
        d_input: &mut [f64],
    ) {
        let c = self.channels;
        let n = (batch * len) as f64;
        for ch in 0..c {
            let (m, istd) = (cache.mean[ch], cache.inv_std[ch]);
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for b in 0..batch {
                let x = &input[(b * input_total + ch) * len..][..len];
                let y = &output[(b * c + ch) * len..][..len];
                let g = &d_output[(b * c + ch) * len..][..len];
                for t in 0..len {
                    if y[t] > 0.0 {
                        sum_dy += g[t];
                        sum_dy_xhat += g[t] * (x[t] - m) * istd;
                    }
                }
            }
            self.weight.grad[ch] += sum_dy_xhat;
            self.bias.grad[ch] += sum_dy;
            let gamma = self.weight.value[ch];
            let k = gamma * istd / n;
            for b in 0..batch {
                let x = &input[(b * input_total + ch) * len..][..len];
                let y = &output[(b * c + ch) * len..][..len];
                let g = &d_output[(b * c + ch) * len..][..len];
                let dst = &mut d_input[(b * input_total + ch) * len..][..len];
                for t in 0..len {
                    let dy = if y[t] > 0.0 { g[t] } else { 0.0 };
                    let xhat = (x[t] - m) * istd;
                    dst[t] += k * (n * dy - sum_dy - xhat * sum_dy_xhat);
                }
            }
        }
    }
}

/// Fully connected layer, `out x in` row-major weights.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
    pub in_features: usize,
    pub out_features: usize,
}

impl Linear {
    /// Uniform weights in `±1/sqrt(fan_in)`, zero bias.
    pub fn new<R: Rng>(in_features: usize, out_features: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_features as f64).sqrt();
        let uniform = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        let weight = (0..in_features * out_features)
            .map(|_| uniform.sample(rng))
            .collect();
        Linear {
            weight: Param::new(weight),
            bias: Param::new(vec![0.0; out_features]),
            in_features,
            out_features,
        }
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Vec<f64> {
        let (fi, fo) = (self.in_features, self.out_features);
        let mut out = Vec::with_capacity(batch * fo);
        for b in 0..batch {
            let x = &input[b * fi..][..fi];
            for o in 0..fo {
                let w = &self.weight.value[o * fi..][..fi];
                out.push(self.bias.value[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
            }
        }
        out
    }

    pub fn backward(&mut self, input: &[f64], d_out: &[f64], batch: usize) -> Vec<f64> {
        let (fi, fo) = (self.in_features, self.out_features);
        let mut d_in = vec![0.0; batch * fi];
        for b in 0..batch {
            let x = &input[b * fi..][..fi];
            let dx = &mut d_in[b * fi..][..fi];
            for o in 0..fo {
                let g = d_out[b * fo + o];
                if g == 0.0 {
                    continue;
                }
                self.bias.grad[o] += g;
                let wg = &mut self.weight.grad[o * fi..][..fi];
                for (w, xi) in wg.iter_mut().zip(x) {
                    *w += g * xi;
                }
                let w = &self.weight.value[o * fi..][..fi];
                for (d, wi) in dx.iter_mut().zip(w) {
                    *d += g * wi;
                }
            }
        }
        d_in
    }
}
