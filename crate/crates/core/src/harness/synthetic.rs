//! Synthetic gaze traces: fixations with drift, tremor and noise, joined
//! by minimum-jerk saccades that follow a subject-specific main sequence.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::manifest::{write_manifest, Manifest, ManifestRow};
use super::recording_io::write_recording;
use crate::error::{Error, Result};
use crate::signal::{GazeRecording, RecordingMeta, Round, SubjectId, Task};

/// Value ranges that subject signatures are drawn from. Each range is cut
/// into one slot per subject, so no two subjects share a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignatureBands {
    pub saccade_rate_hz: [f64; 2],
    pub amplitude_deg: [f64; 2],
    pub peak_velocity_deg_s: [f64; 2],
    pub main_sequence_c_deg: [f64; 2],
    pub direction_deg: [f64; 2],
    pub tremor_hz: [f64; 2],
    pub tremor_amplitude_deg: [f64; 2],
    pub noise_deg: [f64; 2],
    pub drift_deg_s: [f64; 2],
}

impl Default for SignatureBands {
    fn default() -> Self {
        SignatureBands {
            saccade_rate_hz: [0.8, 3.5],
            amplitude_deg: [2.0, 10.0],
            peak_velocity_deg_s: [250.0, 650.0],
            main_sequence_c_deg: [3.0, 12.0],
            direction_deg: [0.0, 180.0],
            tremor_hz: [6.0, 40.0],
            tremor_amplitude_deg: [0.01, 0.06],
            noise_deg: [0.005, 0.04],
            drift_deg_s: [0.1, 1.0],
        }
    }
}

impl SignatureBands {
    fn ranges(&self) -> [[f64; 2]; 9] {
        [
            self.saccade_rate_hz,
            self.amplitude_deg,
            self.peak_velocity_deg_s,
            self.main_sequence_c_deg,
            self.direction_deg,
            self.tremor_hz,
            self.tremor_amplitude_deg,
            self.noise_deg,
            self.drift_deg_s,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub subjects: usize,
    pub first_subject_id: SubjectId,
    pub sampling_rate_hz: f64,
    pub duration_s: f64,
    pub rounds: Vec<Round>,
    pub sessions: Vec<u8>,
    pub tasks: Vec<Task>,
    /// Number of subjects (lowest ids first) recorded in each round, aligned
    /// with `rounds`. Everyone attends when absent.
    pub round_attendance: Option<Vec<usize>>,
    pub blink_rate_hz: f64,
    /// Per-recording wobble of each signature value, as a fraction of its slot.
    pub session_jitter: f64,
    /// Give every subject the same signature (an indistinguishable population).
    pub identical_signatures: bool,
    pub bands: SignatureBands,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            subjects: 16,
            first_subject_id: 1,
            sampling_rate_hz: 250.0,
            duration_s: 60.0,
            rounds: vec![Round(1)],
            sessions: vec![1, 2],
            tasks: vec![Task::Tex],
            round_attendance: None,
            blink_rate_hz: 0.2,
            session_jitter: 0.15,
            identical_signatures: false,
            bands: SignatureBands::default(),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.subjects == 0 {
            return bad("synthetic spec needs at least one subject".into());
        }
        if !(self.sampling_rate_hz > 0.0 && self.sampling_rate_hz.is_finite()) {
            return bad(format!("sampling rate must be positive, got {}", self.sampling_rate_hz));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration_s));
        }
        if self.rounds.is_empty() || self.sessions.is_empty() || self.tasks.is_empty() {
            return bad("rounds, sessions and tasks must be non-empty".into());
        }
        if self.sessions.iter().any(|s| !(1..=2).contains(s)) {
            return bad("sessions must be 1 or 2".into());
        }
        if let Some(att) = &self.round_attendance {
            if att.len() != self.rounds.len() || att.iter().any(|&n| n > self.subjects) {
                return bad("round_attendance must give one count per round, each at most the subject count".into());
            }
        }
        if !(self.blink_rate_hz >= 0.0) || !(0.0..=1.0).contains(&self.session_jitter) {
            return bad("blink rate must be non-negative and session jitter within [0, 1]".into());
        }
        if self.bands.ranges().iter().any(|[lo, hi]| !(lo.is_finite() && hi > lo)) {
            return bad("every signature band needs finite bounds with lo < hi".into());
        }
        if self.bands.tremor_hz[1] >= self.sampling_rate_hz / 2.0 {
            return bad("tremor band must stay below the Nyquist frequency".into());
        }
        Ok(())
    }

    pub fn subject_ids(&self) -> Vec<SubjectId> {
        (0..self.subjects as SubjectId).map(|i| self.first_subject_id + i).collect()
    }
}

/// Per-subject behavioral parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectSignature {
    pub subject_id: SubjectId,
    pub saccade_rate_hz: f64,
    pub amplitude_deg: f64,
    pub peak_velocity_deg_s: f64,
    pub main_sequence_c_deg: f64,
    pub direction_deg: f64,
    pub tremor_hz: f64,
    pub tremor_amplitude_deg: f64,
    pub noise_deg: f64,
    pub drift_deg_s: f64,
    /// Slot positions in [0, 1) for each band, kept for per-recording jitter.
    #[serde(skip)]
    slots: [(usize, f64); 9],
}

impl SubjectSignature {
    fn from_slots(subject_id: SubjectId, slots: [(usize, f64); 9], bands: &SignatureBands, n: usize, jitter: [f64; 9]) -> Self {
        let ranges = bands.ranges();
        let v: Vec<f64> = (0..9)
            .map(|k| {
                let (slot, pos) = slots[k];
                let frac = (slot as f64 + (pos + jitter[k]).clamp(0.0, 1.0)) / n as f64;
                ranges[k][0] + frac * (ranges[k][1] - ranges[k][0])
            })
            .collect();
        SubjectSignature {
            subject_id,
            saccade_rate_hz: v[0],
            amplitude_deg: v[1],
            peak_velocity_deg_s: v[2],
            main_sequence_c_deg: v[3],
            direction_deg: v[4],
            tremor_hz: v[5],
            tremor_amplitude_deg: v[6],
            noise_deg: v[7],
            drift_deg_s: v[8],
            slots,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one signature per subject: each band gets an independent random
/// slot permutation, and each value sits in the central part of its slot.
pub fn draw_signatures(spec: &SyntheticSpec) -> Result<Vec<SubjectSignature>> {
    spec.validate()?;
    let n = spec.subjects;
    let mut rng = rng_for(spec.seed, 0);
    let perms: Vec<Vec<usize>> = (0..9)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let ids = spec.subject_ids();
    let mut sigs = Vec::with_capacity(n);
    for (i, &id) in ids.iter().enumerate() {
        let src = if spec.identical_signatures { 0 } else { i };
        let mut slots = [(0usize, 0.0f64); 9];
        for (k, slot) in slots.iter_mut().enumerate() {
            *slot = (perms[k][src], 0.3 + 0.4 * rng.random::<f64>());
        }
        if spec.identical_signatures && i > 0 {
            slots = sigs.first().map(|s: &SubjectSignature| s.slots).unwrap_or(slots);
        }
        sigs.push(SubjectSignature::from_slots(id, slots, &spec.bands, n, [0.0; 9]));
    }
    Ok(sigs)
}

fn task_index(task: Task) -> u64 {
    Task::ALL.iter().position(|&t| t == task).unwrap_or(0) as u64
}

fn recording_stream(meta: &RecordingMeta) -> u64 {
    1 + ((meta.subject_id as u64) << 24 | (meta.round.0 as u64) << 16 | (meta.session as u64) << 8 | task_index(meta.task))
}

fn min_jerk(tau: f64) -> f64 {
    tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau)
}

const POSITION_LIMIT_DEG: f64 = 12.0;

/// Generates one recording for a subject; deterministic in (spec seed, meta).
pub fn synthesize_recording(spec: &SyntheticSpec, signature: &SubjectSignature, meta: RecordingMeta) -> Result<GazeRecording> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, recording_stream(&meta));
    let n_subjects = spec.subjects;
    let mut jitter = [0.0; 9];
    for j in jitter.iter_mut() {
        *j = (rng.random::<f64>() - 0.5) * spec.session_jitter;
    }
    let sig = SubjectSignature::from_slots(signature.subject_id, signature.slots, &spec.bands, n_subjects, jitter);

    let fs = spec.sampling_rate_hz;
    let dt = 1.0 / fs;
    let n = (spec.duration_s * fs).round() as usize;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut pos = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let fixation = Exp::new(sig.saccade_rate_hz).map_err(|e| Error::Config(e.to_string()))?;
    let amplitude = Gamma::new(3.0, sig.amplitude_deg / 3.0).map_err(|e| Error::Config(e.to_string()))?;
    let axis_noise = Normal::new(0.0, 0.3).expect("valid sd");
    let axis = sig.direction_deg.to_radians();

    while x.len() < n {
        let fix_samples = ((fixation.sample(&mut rng).max(0.08)) * fs).round().max(1.0) as usize;
        let drift_dir = rng.random_range(0.0..2.0 * PI);
        let drift = (sig.drift_deg_s * drift_dir.cos() * dt, sig.drift_deg_s * drift_dir.sin() * dt);
        for _ in 0..fix_samples {
            if x.len() >= n {
                break;
            }
            pos.0 += drift.0;
            pos.1 += drift.1;
            x.push(pos.0);
            y.push(pos.1);
        }
        let a: f64 = amplitude.sample(&mut rng).clamp(0.3, 25.0);
        let mut theta = if rng.random::<f64>() < 0.6 {
            let sign = if rng.random::<bool>() { 0.0 } else { PI };
            axis + sign + axis_noise.sample(&mut rng)
        } else {
            rng.random_range(0.0..2.0 * PI)
        };
        let mut target = (pos.0 + a * theta.cos(), pos.1 + a * theta.sin());
        if target.0.abs() > POSITION_LIMIT_DEG || target.1.abs() > POSITION_LIMIT_DEG {
            theta += PI;
            target = (pos.0 + a * theta.cos(), pos.1 + a * theta.sin());
        }
        let vp = sig.peak_velocity_deg_s * (1.0 - (-a / sig.main_sequence_c_deg).exp());
        let samples = ((1.875 * a / vp) * fs).round().max(2.0) as usize;
        let start = pos;
        for k in 1..=samples {
            if x.len() >= n {
                break;
            }
            let s = min_jerk(k as f64 / samples as f64);
            x.push(start.0 + s * (target.0 - start.0));
            y.push(start.1 + s * (target.1 - start.1));
        }
        pos = target;
    }

    let tremor_phase = rng.random_range(0.0..2.0 * PI);
    let w = 2.0 * PI * sig.tremor_hz;
    let (ca, sa) = (axis.cos(), axis.sin());
    let noise = Normal::new(0.0, sig.noise_deg).map_err(|e| Error::Config(e.to_string()))?;
    for i in 0..n {
        let t = i as f64 * dt;
        let major = sig.tremor_amplitude_deg * (w * t + tremor_phase).sin();
        let minor = 0.4 * sig.tremor_amplitude_deg * (w * t + tremor_phase).cos();
        x[i] += major * ca - minor * sa + noise.sample(&mut rng);
        y[i] += major * sa + minor * ca + noise.sample(&mut rng);
    }

    if spec.blink_rate_hz > 0.0 {
        let gap = Exp::new(spec.blink_rate_hz).expect("positive rate");
        let mut t = gap.sample(&mut rng);
        while t < spec.duration_s {
            let len = rng.random_range(0.1..0.3);
            let (a, b) = ((t * fs) as usize, (((t + len) * fs) as usize).min(n));
            for i in a..b {
                x[i] = f64::NAN;
                y[i] = f64::NAN;
            }
            t += len + gap.sample(&mut rng);
        }
    }
    GazeRecording::uniform(0.0, x, y, fs, meta)
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub signatures: Vec<SubjectSignature>,
}

/// Every (subject, round, session, task) the spec emits, in file order.
pub fn synthetic_metas(spec: &SyntheticSpec) -> Vec<RecordingMeta> {
    let ids = spec.subject_ids();
    let mut metas = Vec::new();
    for (ri, &round) in spec.rounds.iter().enumerate() {
        let attending = spec.round_attendance.as_ref().map_or(ids.len(), |a| a[ri]);
        for &subject_id in &ids[..attending] {
            for &session in &spec.sessions {
                for &task in &spec.tasks {
                    metas.push(RecordingMeta {
                        subject_id,
                        round,
                        session,
                        task,
                    });
                }
            }
        }
    }
    metas
}

/// Writes recordings under `out_dir/recordings`, `manifest.csv` and
/// `signatures.json`.
pub fn generate_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<SyntheticDataset> {
    let signatures = draw_signatures(spec)?;
    let mut rows = Vec::new();
    for meta in synthetic_metas(spec) {
        let sig = signatures
            .iter()
            .find(|s| s.subject_id == meta.subject_id)
            .expect("signature per subject");
        let rec = synthesize_recording(spec, sig, meta.clone())?;
        let rel = PathBuf::from("recordings").join(format!(
            "S{:04}_{}_S{}_{}.csv",
            meta.subject_id, meta.round, meta.session, meta.task
        ));
        write_recording(&out_dir.join(&rel), &rec)?;
        rows.push(ManifestRow {
            subject_id: meta.subject_id,
            round: meta.round,
            session: meta.session,
            task: meta.task,
            sampling_rate_hz: spec.sampling_rate_hz,
            path: rel,
        });
    }
    let manifest = Manifest::new(rows, out_dir)?;
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &manifest)?;
    let sig_path = out_dir.join("signatures.json");
    fs::write(&sig_path, serde_json::to_string_pretty(&signatures).expect("serializable"))
        .map_err(|e| Error::io(&sig_path, e))?;
    Ok(SyntheticDataset {
        manifest,
        manifest_path,
        signatures,
    })
}
