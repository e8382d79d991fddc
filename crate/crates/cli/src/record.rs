use std::path::PathBuf;

use chrono::{DateTime, Utc};
use gazeid_core::harness::{write_json, ExperimentConfig};
use gazeid_core::Result;
use serde::Serialize;

/// Everything needed to rerun a command exactly.
#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    argv: Vec<String>,
    code_version: &'static str,
    config_hash: String,
    seed: u64,
    started_at: String,
    finished_at: String,
    exit_code: u8,
    error: Option<&'a str>,
    artifacts: &'a [PathBuf],
    config: &'a ExperimentConfig,
}

/// Writes `<output_dir>/run_<command>.json`.
pub fn write_run_record(
    command: &str,
    cfg: &ExperimentConfig,
    started: DateTime<Utc>,
    artifacts: &[PathBuf],
    exit_code: u8,
    error: Option<&str>,
) -> Result<PathBuf> {
    let record = RunRecord {
        command,
        argv: std::env::args().collect(),
        code_version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.content_hash(),
        seed: cfg.seed,
        started_at: started.to_rfc3339(),
        finished_at: Utc::now().to_rfc3339(),
        exit_code,
        error,
        artifacts,
        config: cfg,
    };
    let path = cfg.output_dir.join(format!("run_{command}.json"));
    write_json(&path, &record)?;
    Ok(path)
}
