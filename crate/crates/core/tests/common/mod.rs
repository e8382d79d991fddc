//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Cosine similarity matrix computed entry by entry.
pub fn cosine_matrix(emb: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let m = emb.len() / dim;
    let row = |i: usize| &emb[i * dim..(i + 1) * dim];
    let norm = |i: usize| compensated_sum(row(i).iter().map(|v| v * v)).sqrt();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let dot = compensated_sum(row(i).iter().zip(row(k)).map(|(a, b)| a * b));
                    (dot / (norm(i) * norm(k))).clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect()
}

/// Pair mining by direct application of the two inequalities.
pub fn mine_oracle<L: PartialEq>(
    sim: &[Vec<f64>],
    labels: &[L],
    eps: f64,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let m = labels.len();
    let mut pos = vec![Vec::new(); m];
    let mut neg = vec![Vec::new(); m];
    for i in 0..m {
        let cand_p: Vec<usize> = (0..m).filter(|&k| k != i && labels[k] == labels[i]).collect();
        let cand_n: Vec<usize> = (0..m).filter(|&k| labels[k] != labels[i]).collect();
        if cand_p.is_empty() || cand_n.is_empty() {
            continue;
        }
        for &p in &cand_p {
            if cand_n.iter().any(|&n| sim[i][p] < sim[i][n] + eps) {
                pos[i].push(p);
            }
        }
        for &n in &cand_n {
            if cand_p.iter().any(|&p| sim[i][n] > sim[i][p] - eps) {
                neg[i].push(n);
            }
        }
    }
    (pos, neg)
}

/// Literal multi-similarity loss over given pair sets.
pub fn ms_oracle(
    sim: &[Vec<f64>],
    pos: &[Vec<usize>],
    neg: &[Vec<usize>],
    alpha: f64,
    beta: f64,
    lambda: f64,
) -> f64 {
    let m = sim.len();
    let terms = (0..m).map(|i| {
        let sp = compensated_sum(pos[i].iter().map(|&k| (-alpha * (sim[i][k] - lambda)).exp()));
        let sn = compensated_sum(neg[i].iter().map(|&k| (beta * (sim[i][k] - lambda)).exp()));
        sp.ln_1p() / alpha + sn.ln_1p() / beta
    });
    compensated_sum(terms) / m as f64
}

/// Step-function ROC at `-inf`, every distinct score and `+inf`.
pub fn roc_oracle(genuine: &[f64], impostor: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut thresholds: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.insert(0, f64::NEG_INFINITY);
    thresholds.push(f64::INFINITY);
    thresholds
        .into_iter()
        .map(|t| {
            let frr = genuine.iter().filter(|&&s| s < t).count() as f64 / genuine.len() as f64;
            let far = impostor.iter().filter(|&&s| s >= t).count() as f64 / impostor.len() as f64;
            (t, frr, far)
        })
        .collect()
}

/// Equal error rate from a dense threshold grid of spacing `step` over the
/// piecewise-linear rate curves joining the step ROC's points. Sentinel
/// thresholds are placed one `pad` beyond the extreme scores; the crossing
/// rate of a linear segment does not depend on where its ends sit.
pub fn eer_grid_oracle(genuine: &[f64], impostor: &[f64], step: f64, pad: f64) -> f64 {
    let mut pts = roc_oracle(genuine, impostor);
    let n = pts.len();
    pts[0].0 = pts[1].0 - pad;
    pts[n - 1].0 = pts[n - 2].0 + pad;
    for p in &pts {
        if p.1 == p.2 {
            return p.1;
        }
    }
    let lo = pts[0].0;
    let hi = pts[n - 1].0;
    let rates = |t: f64| -> (f64, f64) {
        let j = pts.partition_point(|p| p.0 <= t).clamp(1, n - 1);
        let (a, b) = (pts[j - 1], pts[j]);
        let f = (t - a.0) / (b.0 - a.0);
        (a.1 + f * (b.1 - a.1), a.2 + f * (b.2 - a.2))
    };
    let steps = ((hi - lo) / step).ceil() as usize;
    let mut prev_t = lo;
    let (f0, a0) = rates(lo);
    let mut prev_d = f0 - a0;
    for s in 1..=steps {
        let t = (lo + (s as f64 - 0.5) * step).min(hi);
        let (frr, far) = rates(t);
        let d = frr - far;
        if d == 0.0 {
            return frr;
        }
        if prev_d < 0.0 && d > 0.0 {
            let tc = prev_t + (t - prev_t) * (-prev_d) / (d - prev_d);
            let (fc, ac) = rates(tc);
            return 0.5 * (fc + ac);
        }
        prev_t = t;
        prev_d = d;
    }
    panic!("no FRR/FAR crossing on the grid");
}

/// Minimum FRR among thresholds whose FAR stays within `target`.
pub fn frr_at_far_oracle(genuine: &[f64], impostor: &[f64], target: f64) -> f64 {
    roc_oracle(genuine, impostor)
        .into_iter()
        .filter(|p| p.2 <= target)
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min)
}

/// Fraction of auth subjects whose best-scoring enrolled subject is
/// themselves and strictly better than every other one.
pub fn rank1_oracle(enroll: &[(u32, Vec<f64>)], auth: &[(u32, Vec<f64>)]) -> f64 {
    let cos = |a: &[f64], b: &[f64]| {
        let dot = compensated_sum(a.iter().zip(b).map(|(x, y)| x * y));
        let na = compensated_sum(a.iter().map(|x| x * x)).sqrt();
        let nb = compensated_sum(b.iter().map(|x| x * x)).sqrt();
        dot / (na * nb)
    };
    let probes: Vec<_> = auth.iter().filter(|(s, _)| enroll.iter().any(|(e, _)| e == s)).collect();
    let hits = probes
        .iter()
        .filter(|(s, v)| {
            let own = enroll.iter().find(|(e, _)| e == s).map(|(_, ev)| cos(v, ev)).unwrap();
            enroll.iter().filter(|(e, _)| e != s).all(|(_, ev)| cos(v, ev) < own)
        })
        .count();
    hits as f64 / probes.len() as f64
}

/// Random orthogonal matrix (`dim x dim`, row-major) by Gram-Schmidt.
pub fn random_rotation(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while q.len() < dim {
        let mut v = normal_vec(rng, dim);
        for u in &q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    q.concat()
}

pub fn rotate_rows(emb: &[f64], dim: usize, rot: &[f64]) -> Vec<f64> {
    emb.chunks_exact(dim)
        .flat_map(|row| {
            (0..dim).map(move |i| (0..dim).map(|j| rot[i * dim + j] * row[j]).sum::<f64>())
        })
        .collect()
}

/// MAP@R by explicit ranking of every other point.
pub fn map_at_r_oracle<L: PartialEq>(emb: &[f64], dim: usize, labels: &[L]) -> f64 {
    let sim = cosine_matrix(emb, dim);
    let m = labels.len();
    let mut total = 0.0;
    let mut queries = 0;
    for q in 0..m {
        let r = labels.iter().filter(|l| **l == labels[q]).count() - 1;
        if r == 0 {
            continue;
        }
        let mut others: Vec<usize> = (0..m).filter(|&k| k != q).collect();
        others.sort_by(|&a, &b| sim[q][b].total_cmp(&sim[q][a]).then(a.cmp(&b)));
        let mut hits = 0;
        let mut ap = 0.0;
        for (rank, &k) in others.iter().take(r).enumerate() {
            if labels[k] == labels[q] {
                hits += 1;
                ap += hits as f64 / (rank + 1) as f64;
            }
        }
        total += ap / r as f64;
        queries += 1;
    }
    total / queries as f64
}

/// Raw velocity windows from in-memory synthetic recordings.
pub fn synthetic_windows(
    spec: &gazeid_core::harness::SyntheticSpec,
    window_len: usize,
) -> Vec<gazeid_core::signal::VelocityWindow> {
    use gazeid_core::harness::{draw_signatures, synthesize_recording, synthetic_metas};
    let signatures = draw_signatures(spec).unwrap();
    synthetic_metas(spec)
        .into_iter()
        .flat_map(|meta| {
            let sig = signatures.iter().find(|s| s.subject_id == meta.subject_id).unwrap();
            let rec = synthesize_recording(spec, sig, meta).unwrap();
            gazeid_core::signal::recording_windows(&rec, window_len).unwrap()
        })
        .collect()
}

/// An untrained checkpoint with unit normalization.
pub fn fresh_checkpoint(
    architecture: gazeid_core::model::ArchitectureConfig,
    seed: u64,
    fold: usize,
) -> gazeid_core::model::Checkpoint {
    use gazeid_core::model::{Checkpoint, CheckpointMeta, EmbeddingNet, CHECKPOINT_FORMAT_VERSION};
    let net = EmbeddingNet::new(architecture.clone(), seed).unwrap();
    Checkpoint {
        net,
        meta: CheckpointMeta {
            format_version: CHECKPOINT_FORMAT_VERSION,
            architecture_hash: architecture.content_hash(),
            architecture,
            seed,
            fold_id: Some(fold),
            normalization: gazeid_core::signal::NormalizationStats { mean: 0.0, std: 1.0 },
            weights_file: String::new(),
            weights_sha256: String::new(),
            window_len: 0,
            sampling_rate_hz: 0.0,
        },
    }
}

/// Scores drawn on a `1e-4` grid so ties occur.
pub fn quantized_scores(rng: &mut impl Rng, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            ((mean + sd * z).clamp(-1.0, 1.0) * 1e4).round() / 1e4
        })
        .collect()
}
