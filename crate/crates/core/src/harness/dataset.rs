use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, ManifestRow};
use super::recording_io::read_recording;
use crate::error::{Error, Result};
use crate::signal::{decimate, decimated_window_len, recording_windows, GazeRecording, ScreenGeometry, VelocityWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Window length in samples at the native rate.
    pub window_len: usize,
    /// Downsample to this rate; must divide the native rate.
    pub target_sampling_rate_hz: Option<f64>,
    /// When set, recording files hold pixel positions on this screen.
    pub geometry: Option<ScreenGeometry>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            window_len: 5000,
            target_sampling_rate_hz: None,
            geometry: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 {
            return Err(Error::Config("window_len must be positive".into()));
        }
        if let Some(g) = &self.geometry {
            g.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn factor_for(&self, native_rate: f64) -> Result<usize> {
        match self.target_sampling_rate_hz {
            None => Ok(1),
            Some(target) => decimation_factor(native_rate, target),
        }
    }

    /// Window length after downsampling from `native_rate`.
    pub fn window_len_for(&self, native_rate: f64) -> Result<usize> {
        let len = decimated_window_len(self.window_len, self.factor_for(native_rate)?);
        if len == 0 {
            return Err(Error::Config(format!(
                "window of {} samples is empty after downsampling from {native_rate} Hz",
                self.window_len
            )));
        }
        Ok(len)
    }
}

/// Integer ratio between a native and a target rate.
pub fn decimation_factor(native_rate: f64, target_rate: f64) -> Result<usize> {
    if !(target_rate > 0.0 && target_rate <= native_rate) {
        return Err(Error::Config(format!(
            "target rate {target_rate} Hz must be positive and at most the native {native_rate} Hz"
        )));
    }
    let ratio = native_rate / target_rate;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "target rate {target_rate} Hz does not divide the native {native_rate} Hz"
        )));
    }
    Ok(factor as usize)
}

/// Reads one manifest row, converting and downsampling as configured.
pub fn load_recording(manifest: &Manifest, row: &ManifestRow, config: &PreprocessConfig) -> Result<GazeRecording> {
    let path = manifest.resolve(row);
    let rec = read_recording(&path, row.meta(), row.sampling_rate_hz, config.geometry.as_ref())?;
    let factor = config.factor_for(row.sampling_rate_hz)?;
    decimate(&rec, factor)
}

/// Raw (not yet normalized) velocity windows of one row.
pub fn row_windows(manifest: &Manifest, row: &ManifestRow, config: &PreprocessConfig) -> Result<Vec<VelocityWindow>> {
    let rec = load_recording(manifest, row, config)?;
    recording_windows(&rec, config.window_len_for(row.sampling_rate_hz)?)
}

/// Raw velocity windows of every row, in manifest order.
pub fn load_windows(manifest: &Manifest, config: &PreprocessConfig) -> Result<Vec<VelocityWindow>> {
    config.validate()?;
    let mut out = Vec::new();
    for row in &manifest.rows {
        out.extend(row_windows(manifest, row, config)?);
    }
    Ok(out)
}
