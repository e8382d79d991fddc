//! Velocity estimation with a 7-point, order-2 Savitzky-Golay differentiator.

use crate::error::{Error, Result};

/// Half-width of the differentiation stencil.
pub const SAVGOL_HALF_WIDTH: usize = 3;
/// Stencil length.
pub const SAVGOL_WINDOW: usize = 2 * SAVGOL_HALF_WIDTH + 1;

/// Least-squares quadratic fits over a symmetric 7-sample window have a
/// first-derivative estimate that is independent of the quadratic term:
/// `sum(j * x[i + j]) / sum(j^2)` for `j` in `-3..=3`.
const NORMALIZER: f64 = 28.0;

/// Convolution taps, ordered from offset -3 to +3, before sampling-rate scaling.
pub fn savgol_derivative_taps() -> [f64; SAVGOL_WINDOW] {
    let mut taps = [0.0; SAVGOL_WINDOW];
    for (slot, j) in taps.iter_mut().zip(-(SAVGOL_HALF_WIDTH as i64)..) {
        *slot = j as f64 / NORMALIZER;
    }
    taps
}

/// Differentiates a position trace (degrees) into velocity (deg/s).
///
/// Output has the same length as the input. Edges use replicated boundary
/// samples. Any missing (NaN) sample inside a stencil makes that output
/// sample missing.
pub fn differentiate_savgol(positions: &[f64], sampling_rate: f64) -> Result<Vec<f64>> {
    if positions.len() < SAVGOL_WINDOW {
        return Err(Error::invalid(format!(
            "differentiation needs at least {SAVGOL_WINDOW} samples, got {}",
            positions.len()
        )));
    }
    if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
        return Err(Error::invalid(format!(
            "sampling rate must be positive, got {sampling_rate}"
        )));
    }
    let taps = savgol_derivative_taps();
    let last = positions.len() - 1;
    let h = SAVGOL_HALF_WIDTH as isize;
    let out = (0..positions.len())
        .map(|i| {
            let mut acc = 0.0;
            for (tap, offset) in taps.iter().zip(-h..=h) {
                let idx = (i as isize + offset).clamp(0, last as isize) as usize;
                acc += tap * positions[idx];
            }
            // NaN in the stencil propagates through the sum.
            acc * sampling_rate
        })
        .collect();
    Ok(out)
}

/// Limits velocity magnitude. Missing values stay missing.
pub const VELOCITY_LIMIT: f64 = 1000.0;

pub fn clamp_velocity(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(-VELOCITY_LIMIT, VELOCITY_LIMIT)
    }
}
