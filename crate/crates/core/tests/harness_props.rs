mod common;

use std::fs;
use std::path::Path;

use gazeid_core::evaluation::{compute_roc, ScoreSet};
use gazeid_core::harness::{
    checkpoint_stem, discover_checkpoints, export_embeddings, generate_synthetic, load_manifest, row_windows,
    run_sweep, split_train_test, ExperimentConfig, Manifest, PreprocessConfig, SubjectRule, SweepAxis, SyntheticSpec,
};
use gazeid_core::model::{save_checkpoint, ArchitectureConfig, EmbeddingNet};
use gazeid_core::signal::{fit_normalization, normalize, NormalizationStats, Round, Task, VelocityWindow};
use gazeid_core::training::embed_windows;
use gazeid_core::Error;

use common::synthetic_windows;

fn tiny_arch() -> ArchitectureConfig {
    ArchitectureConfig { num_conv_layers: 2, growth_rate: 4, embedding_dim: 8, ..ArchitectureConfig::default() }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
}

#[test]
fn indistinguishable_population_scores_at_chance() {
    let spec = SyntheticSpec {
        subjects: 8,
        duration_s: 12.0,
        identical_signatures: true,
        seed: 4,
        ..SyntheticSpec::default()
    };
    let windows = synthetic_windows(&spec, 250);
    let stats = fit_normalization(&windows).unwrap();
    let normed: Vec<VelocityWindow> = windows.iter().map(|w| normalize(w, &stats).unwrap()).collect();
    let refs: Vec<&VelocityWindow> = normed.iter().collect();
    let net = EmbeddingNet::new(tiny_arch(), 17).unwrap();
    let emb = embed_windows(&net, &refs, 64).unwrap();
    let (mut genuine, mut impostor) = (Vec::new(), Vec::new());
    for (i, a) in refs.iter().enumerate() {
        for (j, b) in refs.iter().enumerate() {
            if a.provenance.meta.session != 1 || b.provenance.meta.session != 2 {
                continue;
            }
            let s = cosine(&emb[i * 8..(i + 1) * 8], &emb[j * 8..(j + 1) * 8]);
            if a.provenance.meta.subject_id == b.provenance.meta.subject_id {
                genuine.push(s);
            } else {
                impostor.push(s);
            }
        }
    }
    let eer = compute_roc(&ScoreSet::new(genuine, impostor)).unwrap().eer();
    assert!((eer - 0.5).abs() < 0.1, "EER {eer}");
}

fn spec_for(dir_seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        subjects: 12,
        duration_s: 8.0,
        rounds: vec![Round(1), Round(6)],
        round_attendance: Some(vec![12, 5]),
        tasks: vec![Task::Tex, Task::Ran],
        blink_rate_hz: 2.0,
        seed: dir_seed,
        ..SyntheticSpec::default()
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        out.push((entry.strip_prefix(dir).unwrap().display().to_string(), fs::read(&entry).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn synthetic_dataset_is_deterministic_and_loadable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ds = generate_synthetic(&spec_for(1), a.path()).unwrap();
    generate_synthetic(&spec_for(1), b.path()).unwrap();
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));

    let manifest = load_manifest(&ds.manifest_path).unwrap();
    // 12 subjects in R1, 5 in R6, two sessions, two tasks
    assert_eq!(manifest.len(), (12 + 5) * 2 * 2);
    let anonymous: Vec<_> = ds
        .signatures
        .iter()
        .map(|s| [s.saccade_rate_hz, s.amplitude_deg, s.peak_velocity_deg_s, s.tremor_hz, s.noise_deg])
        .collect();
    for (i, a) in anonymous.iter().enumerate() {
        assert!(anonymous[i + 1..].iter().all(|b| b != a));
    }
    assert_eq!(anonymous.len(), 12);
}

#[test]
fn holdout_rules_are_subject_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic(&spec_for(2), dir.path()).unwrap();
    let (train, test) = split_train_test(&ds.manifest, &SubjectRule::InRound(Round(6)), &[Task::Ran]).unwrap();
    assert!(train.subjects().is_disjoint(&test.subjects()));
    assert_eq!(test.subjects(), (1..=5).collect());
    assert!(train.rows.iter().all(|r| r.task != Task::Ran));
    assert!(test.rows.iter().any(|r| r.task == Task::Ran));

    let ten: Vec<u32> = (3..13).collect();
    let (train, test) = split_train_test(&ds.manifest, &SubjectRule::Subjects(ten.clone()), &[]).unwrap();
    assert_eq!(test.subjects(), ten.into_iter().collect());
    assert_eq!(train.subjects(), [1, 2].into_iter().collect());

    let everyone = SubjectRule::Subjects((1..=12).collect());
    assert!(matches!(split_train_test(&ds.manifest, &everyone, &[]), Err(Error::Config(_))));
    let nobody = SubjectRule::InRound(Round(9));
    assert!(matches!(split_train_test(&ds.manifest, &nobody, &[]), Err(Error::Config(_))));
}

fn write_models(dir: &Path, folds: usize, window_len: usize, rate: f64) {
    for f in 0..folds {
        let net = EmbeddingNet::new(tiny_arch(), 50 + f as u64).unwrap();
        let stats = NormalizationStats { mean: 0.0, std: 40.0 };
        save_checkpoint(dir, &checkpoint_stem(Some(f)), &net, 50, Some(f), stats, window_len, rate).unwrap();
    }
}

fn valid_oracle(manifest: &Manifest, pre: &PreprocessConfig) -> usize {
    manifest
        .rows
        .iter()
        .map(|row| {
            row_windows(manifest, row, pre)
                .unwrap()
                .iter()
                .filter(|w| {
                    let missing = w.values.iter().flatten().filter(|v| v.is_nan()).count();
                    missing as f64 <= 0.5 * (2 * w.len()) as f64
                })
                .count()
        })
        .sum()
}

#[test]
fn export_writes_one_row_per_valid_window() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic(&spec_for(3), dir.path()).unwrap();
    let ckpt = dir.path().join("ckpt");
    write_models(&ckpt, 2, 250, 250.0);
    let models = discover_checkpoints(&ckpt).unwrap();
    let pre = PreprocessConfig { window_len: 250, ..PreprocessConfig::default() };
    let out = dir.path().join("emb.csv");
    let rows = export_embeddings(&ds.manifest, &pre, &models, 2, &out).unwrap();
    let total: usize = ds.manifest.rows.iter().map(|r| row_windows(&ds.manifest, r, &pre).unwrap().len()).sum();
    assert_eq!(rows, valid_oracle(&ds.manifest, &pre));
    assert!(rows < total, "blinks should invalidate some windows ({rows} of {total})");

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("subject_id,round,session,task,window_index,d0,"));
    assert!(header.ends_with(",d15"));
    assert_eq!(lines.count(), rows);

    let again = dir.path().join("emb2.csv");
    export_embeddings(&ds.manifest, &pre, &models, 2, &again).unwrap();
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

fn sweep_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.output_dir = dir.to_path_buf();
    cfg.split.folds = 2;
    cfg.evaluation.ensemble_size = 2;
    cfg.preprocess.window_len = 250;
    cfg
}

#[test]
fn sweep_axes_keep_the_protocol_population() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { blink_rate_hz: 0.0, ..spec_for(5) };
    let ds = generate_synthetic(&spec, &dir.path().join("data")).unwrap();
    let cfg = sweep_config(dir.path());
    write_models(&cfg.checkpoint_dir(), 2, 250, 250.0);

    let rows = run_sweep(&cfg, &ds.manifest, SweepAxis::Duration, &["1".into(), "2".into()]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].positives, rows[0].negatives), (12, 132));
    assert_eq!((rows[1].positives, rows[1].negatives), (12, 132));

    let tasks = run_sweep(&cfg, &ds.manifest, SweepAxis::Task, &["TEX".into(), "RAN".into()]).unwrap();
    assert_eq!(tasks.iter().map(|r| r.value.as_str()).collect::<Vec<_>>(), ["TEX", "RAN"]);
    assert!(tasks.iter().all(|r| r.positives == 12));

    // R6 has five returning subjects; everyone enrolled in R1 stays in the gallery
    let rounds = run_sweep(&cfg, &ds.manifest, SweepAxis::Round, &["R6".into()]).unwrap();
    assert_eq!((rounds[0].positives, rounds[0].negatives), (5, 5 * 12 - 5));

    let err = run_sweep(&cfg, &ds.manifest, SweepAxis::SamplingRate, &["125".into()]).unwrap_err();
    assert!(matches!(&err, Error::Config(m) if m.contains("125")));
    assert!(run_sweep(&cfg, &ds.manifest, SweepAxis::Task, &["XYZ".into()]).is_err());
}
