use std::fs;
use std::path::Path;

use serde::Serialize;

use super::dataset::PreprocessConfig;
use super::manifest::Manifest;
use super::protocol::Embedder;
use crate::error::{Error, Result};
use crate::evaluation::ScoredPair;
use crate::model::Checkpoint;

pub const SCORE_HEADER: [&str; 4] = ["pair_type", "enroll_subject", "auth_subject", "score"];

/// Writes a file, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Data(format!("{}: {e}", path.display()))
}

pub fn write_scores_csv(path: &Path, pairs: &[ScoredPair]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(SCORE_HEADER).map_err(csv_err(path))?;
    for p in pairs {
        w.serialize(p).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    write_bytes(path, &bytes)
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoredPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    if header != SCORE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be {}", SCORE_HEADER.join(",")),
        });
    }
    r.deserialize()
        .map(|row: std::result::Result<ScoredPair, csv::Error>| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })
        })
        .collect()
}


/// Writes one CSV row per valid window of every manifest row:
/// `subject_id,round,session,task,window_index,d0..`. Returns the row count.
pub fn export_embeddings(
    manifest: &Manifest,
    preprocess: &PreprocessConfig,
    models: &[Checkpoint],
    ensemble_size: usize,
    path: &Path,
) -> Result<usize> {
    let mut embedder = Embedder::new(manifest, preprocess.clone(), models, ensemble_size)?;
    let dim: usize = models.iter().map(|m| m.net.embedding_dim()).sum();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["subject_id", "round", "session", "task", "window_index"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dim).map(|d| format!("d{d}")));
    w.write_record(&header).map_err(csv_err(path))?;
    let mut count = 0;
    for row in &manifest.rows {
        for (index, emb) in embedder.recording(row)?.iter().enumerate() {
            let Some(emb) = emb else { continue };
            let mut rec = vec![
                row.subject_id.to_string(),
                row.round.to_string(),
                row.session.to_string(),
                row.task.to_string(),
                index.to_string(),
            ];
            rec.extend(emb.values.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err(path))?;
            count += 1;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    write_bytes(path, &bytes)?;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::PairType;

    #[test]
    fn score_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let pairs = vec![
            ScoredPair {
                pair_type: PairType::Genuine,
                enroll_subject: 3,
                auth_subject: 3,
                score: 0.25,
            },
            ScoredPair {
                pair_type: PairType::Impostor,
                enroll_subject: 3,
                auth_subject: 4,
                score: -0.1,
            },
        ];
        write_scores_csv(&p, &pairs).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("pair_type,enroll_subject,auth_subject,score\ngenuine,3,3,0.25\n"));
        assert_eq!(read_scores_csv(&p).unwrap(), pairs);
    }
}
