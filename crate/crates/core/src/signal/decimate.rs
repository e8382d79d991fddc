//! Anti-aliased downsampling.
//!
//! Each stage low-passes with an order-8 Chebyshev type-I filter (0.05 dB
//! ripple, cutoff at `0.8 / q` of Nyquist) run forward and backward, then keeps
//! every `q`-th sample. Every section is scaled to unit gain at DC so constant
//! signals pass unchanged.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::recording::GazeRecording;

pub const FILTER_ORDER: usize = 8;
pub const PASSBAND_RIPPLE_DB: f64 = 0.05;
/// Largest factor handled by a single filter stage.
pub const MAX_SINGLE_STAGE: usize = 12;
/// Largest per-stage factor when a factor is split into cascaded stages.
pub const MAX_CASCADE_STAGE: usize = 8;

/// Direct-form-II-transposed second-order section with `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Steady-state delay line for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = g - self.b[0];
        [z1, z2]
    }

    /// Complex response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + self.b[1] * z1 + self.b[2] * z2;
        let den = self.a[0] + self.a[1] * z1 + self.a[2] * z2;
        num / den
    }
}

/// Chebyshev type-I low-pass as cascaded biquads.
///
/// `cutoff` is the passband edge as a fraction of Nyquist, in (0, 1).
pub fn chebyshev1_lowpass(order: usize, ripple_db: f64, cutoff: f64) -> Result<Vec<Biquad>> {
    if order == 0 || !(cutoff > 0.0 && cutoff < 1.0) || !(ripple_db > 0.0) {
        return Err(Error::invalid(format!(
            "bad Chebyshev design: order {order}, ripple {ripple_db} dB, cutoff {cutoff}"
        )));
    }
    let n = order as f64;
    let eps = (10f64.powf(0.1 * ripple_db) - 1.0).sqrt();
    let mu = (1.0 / eps).asinh() / n;
    // bilinear transform with fs = 2, prewarped so the edge lands on `cutoff`
    let fs2 = 4.0;
    let warped = fs2 * (std::f64::consts::FRAC_PI_2 * cutoff).tan();

    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2.0 * n);
        let analog = Complex64::new(-mu.sinh() * theta.sin(), mu.cosh() * theta.cos()) * warped;
        let z = (fs2 + analog) / (fs2 - analog);
        let a = [1.0, -2.0 * z.re, z.norm_sqr()];
        let k = a.iter().sum::<f64>() / 4.0;
        sections.push(Biquad {
            b: [k, 2.0 * k, k],
            a,
        });
    }
    if order % 2 == 1 {
        let analog = -mu.sinh() * warped;
        let z = (fs2 + analog) / (fs2 - analog);
        let a = [1.0, -z, 0.0];
        let k = (1.0 - z) / 2.0;
        sections.push(Biquad {
            b: [k, k, 0.0],
            a,
        });
    }
    Ok(sections)
}

/// Magnitude of the cascade at normalized angular frequency `w`.
pub fn cascade_magnitude(sections: &[Biquad], w: f64) -> f64 {
    sections.iter().map(|s| s.response(w).norm()).product()
}

fn sosfilt(sections: &[Biquad], x: &mut [f64], x0: f64) {
    let mut gain = x0;
    for s in sections {
        let st = s.step_state();
        let (mut z1, mut z2) = (st[0] * gain, st[1] * gain);
        for v in x.iter_mut() {
            let input = *v;
            let y = s.b[0] * input + z1;
            z1 = s.b[1] * input - s.a[1] * y + z2;
            z2 = s.b[2] * input - s.a[2] * y;
            *v = y;
        }
        gain *= s.dc_gain();
    }
}

/// Zero-phase forward-backward filtering with odd-extension padding.
pub fn filtfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    if x.len() < 2 {
        return x.to_vec();
    }
    let ntaps = 2 * sections.len() + 1;
    let pad = (3 * ntaps).min(x.len() - 1);
    let first = x[0];
    let last = x[x.len() - 1];
    let mut ext = Vec::with_capacity(x.len() + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));

    let start = ext[0];
    sosfilt(sections, &mut ext, start);
    ext.reverse();
    let start = ext[0];
    sosfilt(sections, &mut ext, start);
    ext.reverse();
    ext[pad..pad + x.len()].to_vec()
}

/// Splits a decimation factor into per-stage factors.
pub fn stage_factors(factor: usize) -> Vec<usize> {
    if factor <= MAX_SINGLE_STAGE {
        return vec![factor];
    }
    let mut rest = factor;
    let mut stages = Vec::new();
    while rest > 1 {
        match (2..=MAX_CASCADE_STAGE).rev().find(|d| rest % d == 0) {
            Some(d) => {
                stages.push(d);
                rest /= d;
            }
            None => {
                log::warn!("decimation factor {factor} has a prime factor above {MAX_CASCADE_STAGE}; using a {rest}x stage");
                stages.push(rest);
                rest = 1;
            }
        }
    }
    stages
}

/// Linear interpolation over NaN runs; edge runs take the nearest valid value.
/// Returns `None` if every sample is missing.
fn fill_missing(x: &[f64]) -> Option<Vec<f64>> {
    let valid: Vec<usize> = (0..x.len()).filter(|&i| !x[i].is_nan()).collect();
    let (&first, &last) = (valid.first()?, valid.last()?);
    let mut out = x.to_vec();
    out[..first].fill(x[first]);
    out[last + 1..].fill(x[last]);
    for pair in valid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for i in a + 1..b {
            let f = (i - a) as f64 / (b - a) as f64;
            out[i] = x[a] + f * (x[b] - x[a]);
        }
    }
    Some(out)
}

/// Low-pass filters and downsamples one channel by `factor`.
pub fn decimate_channel(x: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor < 1 {
        return Err(Error::invalid("decimation factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(x.to_vec());
    }
    let out_len = x.len().div_ceil(factor);
    let Some(mut signal) = fill_missing(x) else {
        return Ok(vec![f64::NAN; out_len]);
    };
    for q in stage_factors(factor) {
        let sections = chebyshev1_lowpass(FILTER_ORDER, PASSBAND_RIPPLE_DB, 0.8 / q as f64)?;
        let filtered = filtfilt(&sections, &signal);
        signal = filtered.into_iter().step_by(q).collect();
    }
    debug_assert_eq!(signal.len(), out_len);
    for (i, v) in x.iter().enumerate() {
        if v.is_nan() {
            let j = ((i as f64 / factor as f64).round() as usize).min(out_len - 1);
            signal[j] = f64::NAN;
        }
    }
    Ok(signal)
}

/// Downsamples a recording to `sampling_rate / factor`.
pub fn decimate(recording: &GazeRecording, factor: usize) -> Result<GazeRecording> {
    if factor < 1 {
        return Err(Error::invalid("decimation factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(recording.clone());
    }
    Ok(GazeRecording {
        timestamps: recording.timestamps.iter().copied().step_by(factor).collect(),
        x: decimate_channel(&recording.x, factor)?,
        y: decimate_channel(&recording.y, factor)?,
        sampling_rate: recording.sampling_rate / factor as f64,
        meta: recording.meta.clone(),
    })
}

/// Window length after downsampling a `len`-sample window by `factor`.
pub fn decimated_window_len(len: usize, factor: usize) -> usize {
    len / factor.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::recording::{RecordingMeta, Round, Task};
    use std::f64::consts::PI;

    fn rec(x: Vec<f64>) -> GazeRecording {
        let y = x.iter().map(|v| -v).collect();
        GazeRecording::uniform(
            0.0,
            x,
            y,
            1000.0,
            RecordingMeta {
                subject_id: 3,
                round: Round(1),
                session: 1,
                task: Task::Ran,
            },
        )
        .unwrap()
    }

    #[test]
    fn window_length_after_factor_32() {
        assert_eq!(decimated_window_len(5000, 32), 156);
        assert_eq!(decimated_window_len(5000, 1), 5000);
    }

    #[test]
    fn factor_one_is_identity() {
        let r = rec((0..100).map(|i| (i as f64 * 0.37).sin()).collect());
        assert_eq!(decimate(&r, 1).unwrap(), r);
        assert!(decimate(&r, 0).is_err());
    }

    #[test]
    fn constant_passes_through() {
        for factor in [2, 4, 8, 20, 32] {
            let r = rec(vec![3.25; 4000]);
            let d = decimate(&r, factor).unwrap();
            assert_eq!(d.len(), 4000usize.div_ceil(factor));
            assert_eq!(d.sampling_rate, 1000.0 / factor as f64);
            for v in &d.x {
                assert!((v - 3.25).abs() < 1e-6, "factor {factor}: {v}");
            }
        }
    }

    #[test]
    fn stage_split() {
        assert_eq!(stage_factors(8), vec![8]);
        assert_eq!(stage_factors(12), vec![12]);
        assert_eq!(stage_factors(32), vec![8, 4]);
        assert_eq!(stage_factors(20), vec![5, 4]);
    }

    #[test]
    fn design_is_flat_in_passband_and_steep_outside() {
        let s = chebyshev1_lowpass(8, 0.05, 0.2).unwrap();
        assert!((cascade_magnitude(&s, 0.0) - 1.0).abs() < 1e-12);
        let ripple = 10f64.powf(0.05 / 20.0);
        for i in 0..=100 {
            let w = PI * 0.2 * i as f64 / 100.0;
            let m = cascade_magnitude(&s, w);
            assert!(m <= ripple + 1e-9 && m >= 1.0 - 1e-9, "w={w} m={m}");
        }
        assert!(cascade_magnitude(&s, PI * 0.4) < 0.01);
    }

    #[test]
    fn supra_nyquist_tone_is_attenuated() {
        // 200 Hz tone at 1 kHz, decimated by 4: new Nyquist is 125 Hz.
        let x: Vec<f64> = (0..8000)
            .map(|i| (2.0 * PI * 200.0 * i as f64 / 1000.0).sin())
            .collect();
        let d = decimate_channel(&x, 4).unwrap();
        let interior = &d[100..d.len() - 100];
        let rms = (interior.iter().map(|v| v * v).sum::<f64>() / interior.len() as f64).sqrt();
        let attenuation_db = 20.0 * (rms / (0.5f64).sqrt()).log10();
        assert!(attenuation_db <= -20.0, "{attenuation_db} dB");
    }

    #[test]
    fn missing_samples_remain_marked() {
        let mut x: Vec<f64> = (0..400).map(|i| (i as f64 * 0.01).sin()).collect();
        x[100] = f64::NAN;
        x[101] = f64::NAN;
        let d = decimate_channel(&x, 4).unwrap();
        assert!(d[25].is_nan());
        assert_eq!(d.iter().filter(|v| v.is_nan()).count(), 1);
        let all_nan = decimate_channel(&[f64::NAN; 40], 4).unwrap();
        assert_eq!(all_nan.len(), 10);
        assert!(all_nan.iter().all(|v| v.is_nan()));
    }
}
