//! Gaze preprocessing: positions to clamped velocities, windowing,
//! normalization, downsampling and binocular merging.

mod decimate;
mod geometry;
mod recording;
mod savgol;

pub use decimate::{
    cascade_magnitude, chebyshev1_lowpass, decimate, decimate_channel, decimated_window_len,
    filtfilt, stage_factors, Biquad,
};
pub use geometry::{merge_binocular, ScreenGeometry};
pub use recording::{
    fit_normalization, normalize, split_windows, GazeRecording, NormalizationStats,
    RecordingMeta, Round, Stage, SubjectId, Task, VelocityWindow, WindowProvenance,
    MAX_NAN_FRACTION, TIMESTAMP_TOLERANCE,
};
pub use savgol::{
    clamp_velocity, differentiate_savgol, savgol_derivative_taps, SAVGOL_WINDOW, VELOCITY_LIMIT,
};

use crate::error::Result;

/// Differentiates and clamps both channels of a recording.
pub fn velocity_channels(recording: &GazeRecording) -> Result<[Vec<f64>; 2]> {
    let fs = recording.sampling_rate;
    let clamp = |v: Vec<f64>| v.into_iter().map(clamp_velocity).collect::<Vec<_>>();
    Ok([
        clamp(differentiate_savgol(&recording.x, fs)?),
        clamp(differentiate_savgol(&recording.y, fs)?),
    ])
}

/// Velocity windows of `window_len` samples from a recording, not yet normalized.
pub fn recording_windows(
    recording: &GazeRecording,
    window_len: usize,
) -> Result<Vec<VelocityWindow>> {
    let channels = velocity_channels(recording)?;
    split_windows(&channels, window_len, &recording.meta)
}
