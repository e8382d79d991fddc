mod common;

use gazeid_core::objective::{
    ce_loss, ce_loss_with_grad, combined_loss, mine_pairs, ms_loss, ms_loss_embeddings, LossConfig,
    PairSets, SimilarityMatrix,
};
use proptest::prelude::*;
use rand::Rng;

use common::{cosine_matrix, mine_oracle, ms_oracle, normal_vec, rng};

fn random_batch(seed: u64, m: usize, dim: usize) -> (Vec<f64>, Vec<u32>) {
    let mut r = rng(seed);
    let classes = r.random_range(2..=4u32);
    let mut labels: Vec<u32> = (0..m as u32).map(|i| i % classes).collect();
    for i in (1..m).rev() {
        labels.swap(i, r.random_range(0..=i));
    }
    (normal_vec(&mut r, m * dim), labels)
}

fn sim_matrix(sim: &[Vec<f64>]) -> SimilarityMatrix {
    SimilarityMatrix::from_matrix(sim.len(), sim.concat()).unwrap()
}

#[test]
fn ms_loss_matches_direct_summation() {
    let cfg = LossConfig::default();
    for seed in 0..50 {
        let (emb, labels) = random_batch(seed, 8, 8);
        let sim = cosine_matrix(&emb, 8);
        let (pos, neg) = mine_oracle(&sim, &labels, cfg.epsilon);
        let want = ms_oracle(&sim, &pos, &neg, cfg.alpha, cfg.beta, cfg.lambda);
        let (got, _) = ms_loss_embeddings(&emb, 8, &labels, &cfg).unwrap();
        let tol = 1e-6 * want.abs().max(1e-12);
        assert!((got - want).abs() <= tol, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn ms_gradient_matches_central_differences() {
    let cfg = LossConfig::default();
    let h = 1e-4;
    let mut checked = 0;
    for seed in 0..50 {
        let (emb, labels) = random_batch(seed, 8, 8);
        let (_, grad) = ms_loss_embeddings(&emb, 8, &labels, &cfg).unwrap();
        let base = mine_pairs(&SimilarityMatrix::from_embeddings(&emb, 8).unwrap(), &labels, cfg.epsilon).unwrap();
        for j in 0..emb.len() {
            let mut plus = emb.clone();
            let mut minus = emb.clone();
            plus[j] += h;
            minus[j] -= h;
            let mined = |e: &[f64]| {
                mine_pairs(&SimilarityMatrix::from_embeddings(e, 8).unwrap(), &labels, cfg.epsilon).unwrap()
            };
            if mined(&plus) != base || mined(&minus) != base {
                continue;
            }
            let lp = ms_loss_embeddings(&plus, 8, &labels, &cfg).unwrap().0;
            let lm = ms_loss_embeddings(&minus, 8, &labels, &cfg).unwrap().0;
            let fd = (lp - lm) / (2.0 * h);
            let tol = 1e-4 * grad[j].abs().max(fd.abs()) + 1e-9;
            assert!((grad[j] - fd).abs() <= tol, "seed {seed} coord {j}: {} vs {fd}", grad[j]);
            checked += 1;
        }
    }
    assert!(checked > 2000, "only {checked} coordinates checked");
}

#[test]
fn miner_matches_brute_force() {
    let mut r = rng(7);
    for case in 0..100 {
        let m = r.random_range(2..=7);
        let classes = r.random_range(1..=3u8);
        let labels: Vec<u8> = (0..m).map(|_| r.random_range(0..classes)).collect();
        let mut sim = vec![vec![1.0; m]; m];
        for i in 0..m {
            for k in i + 1..m {
                let s = r.random_range(-1.0..1.0);
                sim[i][k] = s;
                sim[k][i] = s;
            }
        }
        let eps = [0.0, 0.1, 0.5, 3.0][case % 4];
        let got = mine_pairs(&sim_matrix(&sim), &labels, eps).unwrap();
        let (pos, neg) = mine_oracle(&sim, &labels, eps);
        assert_eq!(got.positives, pos, "case {case}");
        assert_eq!(got.negatives, neg, "case {case}");
    }
}

#[test]
fn miner_edge_cases() {
    let sim = vec![vec![1.0, 0.2, 0.3], vec![0.2, 1.0, 0.4], vec![0.3, 0.4, 1.0]];
    // single class: no negatives anywhere
    let one = mine_pairs(&sim_matrix(&sim), &[5, 5, 5], 0.1).unwrap();
    assert_eq!(one.num_pairs(), 0);
    // all distinct: no positives anywhere
    let distinct = mine_pairs(&sim_matrix(&sim), &[1, 2, 3], 0.1).unwrap();
    assert_eq!(distinct, PairSets::empty(3));
    // anchor 2 has no positive, so it mines nothing even with negatives present
    let mixed = mine_pairs(&sim_matrix(&sim), &[0, 0, 1], 10.0).unwrap();
    assert!(mixed.positives[2].is_empty() && mixed.negatives[2].is_empty());
    assert_eq!(mixed.positives[0], vec![1]);
    assert_eq!(mixed.negatives[0], vec![2]);
    assert!(mine_pairs(&sim_matrix(&sim), &[0, 1], 0.1).is_err());
    let single = SimilarityMatrix::from_matrix(1, vec![1.0]).unwrap();
    assert!(mine_pairs(&single, &[0], 0.1).is_err());
}

#[test]
fn perfectly_clustered_batch_beats_a_weakened_positive() {
    let labels = [0, 0, 1, 1];
    let mut sim = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            sim[i][k] = if labels[i] == labels[k] { 1.0 } else { -1.0 };
        }
    }
    let cfg = LossConfig { w_ce: 0.0, ..LossConfig::default() };
    let eval = |s: &[Vec<f64>]| {
        let sm = sim_matrix(s);
        let pairs = mine_pairs(&sm, &labels, cfg.epsilon).unwrap();
        combined_loss(ms_loss(&sm, &pairs, cfg.alpha, cfg.beta, cfg.lambda).unwrap(), 0.0, cfg.w_ms, cfg.w_ce)
    };
    let clustered = eval(&sim);
    let mut weakened = sim.clone();
    weakened[0][1] = -0.95;
    weakened[1][0] = -0.95;
    assert!(clustered < eval(&weakened));
}

#[test]
fn ce_matches_direct_softmax() {
    let mut r = rng(11);
    let logits: Vec<f64> = (0..20).map(|_| r.random_range(-5.0..5.0)).collect();
    let targets = [0, 3, 1, 2, 3];
    let want = compensate_ce(&logits, 4, &targets);
    let got = ce_loss(&logits, 4, &targets).unwrap();
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
}

fn compensate_ce(logits: &[f64], classes: usize, targets: &[usize]) -> f64 {
    let terms = targets.iter().enumerate().map(|(i, &y)| {
        let row = &logits[i * classes..(i + 1) * classes];
        let z = common::compensated_sum(row.iter().map(|x| x.exp()));
        -(row[y].exp() / z).ln()
    });
    common::compensated_sum(terms) / targets.len() as f64
}

#[test]
fn ce_rejects_out_of_range_target() {
    assert!(ce_loss(&[0.0, 1.0], 2, &[2]).is_err());
}

fn arb_sim(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(-1.0f64..1.0, m * (m - 1) / 2).prop_map(move |upper| {
        let mut sim = vec![vec![1.0; m]; m];
        let mut it = upper.into_iter();
        for i in 0..m {
            for k in i + 1..m {
                let s = it.next().unwrap();
                sim[i][k] = s;
                sim[k][i] = s;
            }
        }
        sim
    })
}

proptest! {
    #[test]
    fn ms_loss_is_nonnegative_and_monotone(
        sim in arb_sim(6),
        labels in proptest::collection::vec(0u8..3, 6),
        which in 0usize..36,
        bump in 0.0f64..0.5,
    ) {
        let cfg = LossConfig::default();
        let sm = sim_matrix(&sim);
        let pairs = mine_pairs(&sm, &labels, cfg.epsilon).unwrap();
        let base = ms_loss(&sm, &pairs, cfg.alpha, cfg.beta, cfg.lambda).unwrap();
        prop_assert!(base >= 0.0);
        let (i, k) = (which / 6, which % 6);
        let is_neg = pairs.negatives[i].contains(&k);
        let is_pos = pairs.positives[i].contains(&k);
        if is_neg || is_pos {
            // pair sets held fixed while one similarity moves up
            let mut moved = sim.clone();
            moved[i][k] = (moved[i][k] + bump).min(1.0);
            let l = ms_loss(&sim_matrix(&moved), &pairs, cfg.alpha, cfg.beta, cfg.lambda).unwrap();
            if is_neg {
                prop_assert!(l >= base);
            } else {
                prop_assert!(l <= base);
            }
        }
    }

    #[test]
    fn mining_ignores_label_names(
        sim in arb_sim(7),
        labels in proptest::collection::vec(0u8..3, 7),
        perm in Just([0u8, 1, 2]).prop_shuffle(),
    ) {
        let sm = sim_matrix(&sim);
        let relabeled: Vec<u8> = labels.iter().map(|&l| perm[l as usize] + 10).collect();
        prop_assert_eq!(mine_pairs(&sm, &labels, 0.1).unwrap(), mine_pairs(&sm, &relabeled, 0.1).unwrap());
    }

    #[test]
    fn ce_is_shift_invariant(
        logits in proptest::collection::vec(-20.0f64..20.0, 12),
        targets in proptest::collection::vec(0usize..4, 3),
        shift in -100.0f64..100.0,
    ) {
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let (a, ga) = ce_loss_with_grad(&logits, 4, &targets).unwrap();
        let (b, gb) = ce_loss_with_grad(&shifted, 4, &targets).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        for (x, y) in ga.iter().zip(&gb) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }
}
