use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{RecordingMeta, Round, SubjectId, Task};

pub const MANIFEST_HEADER: [&str; 6] = ["subject_id", "round", "session", "task", "sampling_rate_hz", "path"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub subject_id: SubjectId,
    pub round: Round,
    pub session: u8,
    pub task: Task,
    pub sampling_rate_hz: f64,
    /// As written in the file; relative paths resolve against the manifest directory.
    pub path: PathBuf,
}

impl ManifestRow {
    pub fn meta(&self) -> RecordingMeta {
        RecordingMeta {
            subject_id: self.subject_id,
            round: self.round,
            session: self.session,
            task: self.task,
        }
    }

    pub fn key(&self) -> (SubjectId, Round, u8, Task) {
        (self.subject_id, self.round, self.session, self.task)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
    /// Directory that relative recording paths are resolved against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Manifest {
            rows,
            base_dir: base_dir.into(),
        };
        m.check_unique()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subjects(&self) -> BTreeSet<SubjectId> {
        self.rows.iter().map(|r| r.subject_id).collect()
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        if row.path.is_absolute() {
            row.path.clone()
        } else {
            self.base_dir.join(&row.path)
        }
    }

    /// Rows kept by `keep`, same base directory.
    pub fn filtered(&self, keep: impl Fn(&ManifestRow) -> bool) -> Manifest {
        Manifest {
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    /// Recording counts per subject, for fold balancing.
    pub fn recording_counts(&self) -> Vec<(SubjectId, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for r in &self.rows {
            *counts.entry(r.subject_id).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.rows {
            if !seen.insert(r.key()) {
                return Err(Error::Data(format!(
                    "duplicate manifest key (subject {}, {}, session {}, {})",
                    r.subject_id, r.round, r.session, r.task
                )));
            }
        }
        Ok(())
    }
}

fn field<'a>(record: &'a csv::StringRecord, i: usize) -> &'a str {
    record.get(i).unwrap_or("").trim()
}

fn parse_row(record: &csv::StringRecord) -> std::result::Result<ManifestRow, String> {
    if record.len() != MANIFEST_HEADER.len() {
        return Err(format!("expected {} fields, found {}", MANIFEST_HEADER.len(), record.len()));
    }
    let subject_id = field(record, 0)
        .parse()
        .map_err(|_| format!("bad subject_id {:?}", field(record, 0)))?;
    let round = field(record, 1).parse::<Round>().map_err(|e| e.to_string())?;
    let session: u8 = field(record, 2)
        .parse()
        .map_err(|_| format!("bad session {:?}", field(record, 2)))?;
    if !(1..=2).contains(&session) {
        return Err(format!("session must be 1 or 2, got {session}"));
    }
    let task = field(record, 3).parse::<Task>().map_err(|e| e.to_string())?;
    let sampling_rate_hz: f64 = field(record, 4)
        .parse()
        .map_err(|_| format!("bad sampling_rate_hz {:?}", field(record, 4)))?;
    if !(sampling_rate_hz > 0.0 && sampling_rate_hz.is_finite()) {
        return Err(format!("sampling rate must be positive, got {sampling_rate_hz}"));
    }
    let path = field(record, 5);
    if path.is_empty() {
        return Err("empty path".into());
    }
    Ok(ManifestRow {
        subject_id,
        round,
        session,
        task,
        sampling_rate_hz,
        path: PathBuf::from(path),
    })
}

fn read_manifest(path: &Path, check_files: bool) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != MANIFEST_HEADER {
        return Err(parse_err(1, format!("header must be {}", MANIFEST_HEADER.join(","))));
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rows: Vec<ManifestRow> = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let row = parse_row(&record).map_err(|m| parse_err(line, m))?;
        if !seen.insert(row.key()) {
            return Err(parse_err(
                line,
                format!(
                    "duplicate key (subject {}, {}, session {}, {})",
                    row.subject_id, row.round, row.session, row.task
                ),
            ));
        }
        rows.push(row);
    }
    let manifest = Manifest { rows, base_dir };
    if check_files {
        for row in &manifest.rows {
            let p = manifest.resolve(row);
            if !p.is_file() {
                return Err(Error::Data(format!("recording {} listed in {} does not exist", p.display(), path.display())));
            }
        }
    }
    Ok(manifest)
}

/// Reads and validates a manifest; every referenced recording must exist.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    read_manifest(path, true)
}

/// Like [`load_manifest`] without checking that recordings exist.
pub fn load_manifest_unchecked(path: &Path) -> Result<Manifest> {
    read_manifest(path, false)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    w.write_record(MANIFEST_HEADER).map_err(io_err)?;
    for r in &manifest.rows {
        w.write_record([
            r.subject_id.to_string(),
            r.round.to_string(),
            r.session.to_string(),
            r.task.to_string(),
            r.sampling_rate_hz.to_string(),
            r.path.display().to_string(),
        ])
        .map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
