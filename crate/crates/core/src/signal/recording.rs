use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SubjectId = u32;

/// Recording task of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Task {
    Tex,
    Hss,
    Ran,
    Fxs,
    Vd1,
    Vd2,
    Blg,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::Tex,
        Task::Hss,
        Task::Ran,
        Task::Fxs,
        Task::Vd1,
        Task::Vd2,
        Task::Blg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Tex => "TEX",
            Task::Hss => "HSS",
            Task::Ran => "RAN",
            Task::Fxs => "FXS",
            Task::Vd1 => "VD1",
            Task::Vd2 => "VD2",
            Task::Blg => "BLG",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown task {s:?}")))
    }
}

/// Recording round, 1-based (`R1`..`R9`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Round(pub u8);

impl fmt::Display for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

impl FromStr for Round {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let digits = s.strip_prefix(['R', 'r']).unwrap_or(s);
        match digits.parse::<u8>() {
            Ok(n) if (1..=9).contains(&n) => Ok(Round(n)),
            _ => Err(Error::invalid(format!("round must be R1..R9, got {s:?}"))),
        }
    }
}

impl TryFrom<String> for Round {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Round> for String {
    fn from(r: Round) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub subject_id: SubjectId,
    pub round: Round,
    pub session: u8,
    pub task: Task,
}

/// Uniformly sampled gaze positions in degrees. Missing samples are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeRecording {
    pub timestamps: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sampling_rate: f64,
    pub meta: RecordingMeta,
}

/// Allowed deviation of a timestamp step from `1 / sampling_rate`, seconds.
pub const TIMESTAMP_TOLERANCE: f64 = 1e-6;

impl GazeRecording {
    pub fn new(
        timestamps: Vec<f64>,
        x: Vec<f64>,
        y: Vec<f64>,
        sampling_rate: f64,
        meta: RecordingMeta,
    ) -> Result<Self> {
        let rec = GazeRecording {
            timestamps,
            x,
            y,
            sampling_rate,
            meta,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Builds a recording with timestamps `t0 + i / sampling_rate`.
    pub fn uniform(
        t0: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        sampling_rate: f64,
        meta: RecordingMeta,
    ) -> Result<Self> {
        let timestamps = (0..x.len())
            .map(|i| t0 + i as f64 / sampling_rate)
            .collect();
        Self::new(timestamps, x, y, sampling_rate, meta)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate
            )));
        }
        if self.x.len() != self.timestamps.len() || self.y.len() != self.timestamps.len() {
            return Err(Error::invalid(format!(
                "channel lengths differ: t={}, x={}, y={}",
                self.timestamps.len(),
                self.x.len(),
                self.y.len()
            )));
        }
        let dt = 1.0 / self.sampling_rate;
        for (i, w) in self.timestamps.windows(2).enumerate() {
            let step = w[1] - w[0];
            if !(step > 0.0) || (step - dt).abs() >= TIMESTAMP_TOLERANCE {
                return Err(Error::invalid(format!(
                    "timestamp step {step} at sample {} deviates from 1/{} s",
                    i + 1,
                    self.sampling_rate
                )));
            }
        }
        Ok(())
    }
}

/// Whether a window's values are still raw velocities or already z-scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Velocity,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowProvenance {
    pub meta: RecordingMeta,
    pub window_index: usize,
}

/// A two-channel velocity segment (channel 0 horizontal, channel 1 vertical).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityWindow {
    pub values: [Vec<f64>; 2],
    pub nan_mask: [Vec<bool>; 2],
    pub provenance: WindowProvenance,
    pub stage: Stage,
}

/// Maximum fraction of missing samples for a window to be usable at evaluation.
pub const MAX_NAN_FRACTION: f64 = 0.5;

impl VelocityWindow {
    /// Wraps raw velocities; NaNs become the missing mask.
    pub fn from_velocity(values: [Vec<f64>; 2], provenance: WindowProvenance) -> Result<Self> {
        if values[0].is_empty() || values[0].len() != values[1].len() {
            return Err(Error::invalid(format!(
                "window channels must be non-empty and equal length, got {} and {}",
                values[0].len(),
                values[1].len()
            )));
        }
        let nan_mask = [
            values[0].iter().map(|v| v.is_nan()).collect(),
            values[1].iter().map(|v| v.is_nan()).collect(),
        ];
        Ok(VelocityWindow {
            values,
            nan_mask,
            provenance,
            stage: Stage::Velocity,
        })
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.values[0].is_empty()
    }

    pub fn nan_fraction(&self) -> f64 {
        let missing = self.nan_mask.iter().flatten().filter(|&&m| m).count();
        missing as f64 / (2 * self.len()) as f64
    }

    /// A window is valid unless more than half its samples are missing.
    pub fn is_valid(&self) -> bool {
        self.nan_fraction() <= MAX_NAN_FRACTION
    }

    /// Channel-major `2 x T` buffer as consumed by the network.
    pub fn to_channel_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        out.extend_from_slice(&self.values[0]);
        out.extend_from_slice(&self.values[1]);
        out
    }
}

/// Splits velocity channels into consecutive non-overlapping windows of `len`
/// samples. A trailing partial window is dropped.
pub fn split_windows(
    channels: &[Vec<f64>; 2],
    len: usize,
    meta: &RecordingMeta,
) -> Result<Vec<VelocityWindow>> {
    if len == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    if channels[0].len() != channels[1].len() {
        return Err(Error::invalid("velocity channels differ in length"));
    }
    let count = channels[0].len() / len;
    (0..count)
        .map(|w| {
            let range = w * len..(w + 1) * len;
            VelocityWindow::from_velocity(
                [
                    channels[0][range.clone()].to_vec(),
                    channels[1][range].to_vec(),
                ],
                WindowProvenance {
                    meta: meta.clone(),
                    window_index: w,
                },
            )
        })
        .collect()
}

/// One mean/std pair shared by both velocity channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: f64,
    pub std: f64,
}

/// Pools every non-missing sample of both channels and returns the mean and
/// population standard deviation.
pub fn fit_normalization<'a, I>(windows: I) -> Result<NormalizationStats>
where
    I: IntoIterator<Item = &'a VelocityWindow>,
{
    // Welford accumulation
    let mut n = 0u64;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for w in windows {
        if w.stage != Stage::Velocity {
            return Err(Error::invalid(
                "normalization statistics must be fitted on un-normalized windows",
            ));
        }
        for (vals, mask) in w.values.iter().zip(&w.nan_mask) {
            for (&v, &missing) in vals.iter().zip(mask) {
                if missing || v.is_nan() {
                    continue;
                }
                n += 1;
                let delta = v - mean;
                mean += delta / n as f64;
                m2 += delta * (v - mean);
            }
        }
    }
    if n == 0 {
        return Err(Error::invalid(
            "cannot fit normalization: no non-missing samples",
        ));
    }
    let std = (m2 / n as f64).sqrt();
    if !(std > 0.0) {
        return Err(Error::invalid(
            "cannot fit normalization: zero variance across training windows",
        ));
    }
    Ok(NormalizationStats { mean, std })
}

/// Z-scores a velocity window, then replaces missing samples with 0.
pub fn normalize(window: &VelocityWindow, stats: &NormalizationStats) -> Result<VelocityWindow> {
    if window.stage == Stage::Normalized {
        return Err(Error::invalid(format!(
            "window {:?} is already normalized",
            window.provenance
        )));
    }
    if !(stats.std > 0.0) {
        return Err(Error::invalid("normalization std must be positive"));
    }
    let scale = |vals: &[f64], mask: &[bool]| -> Vec<f64> {
        vals.iter()
            .zip(mask)
            .map(|(&v, &missing)| {
                if missing || !v.is_finite() {
                    0.0
                } else {
                    (v - stats.mean) / stats.std
                }
            })
            .collect()
    };
    Ok(VelocityWindow {
        values: [
            scale(&window.values[0], &window.nan_mask[0]),
            scale(&window.values[1], &window.nan_mask[1]),
        ],
        nan_mask: window.nan_mask.clone(),
        provenance: window.provenance.clone(),
        stage: Stage::Normalized,
    })
}
