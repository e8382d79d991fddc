mod common;

use gazeid_core::model::{ArchitectureConfig, EmbeddingNet};
use gazeid_core::Error;
use proptest::prelude::*;

use common::{normal_vec, rng};

fn small(layers: usize, growth: usize) -> ArchitectureConfig {
    ArchitectureConfig {
        num_conv_layers: layers,
        growth_rate: growth,
        embedding_dim: 16,
        ..ArchitectureConfig::default()
    }
}

#[test]
fn default_parameter_counts() {
    let cfg = ArchitectureConfig::default();
    assert_eq!(cfg.count_parameters(false).unwrap(), 123_040);
    assert_eq!(cfg.clone().with_classes(198).count_parameters(true).unwrap(), 148_838);
    let net = EmbeddingNet::new(cfg.with_classes(198), 0).unwrap();
    let enumerated: usize = net.params().iter().map(|p| p.len()).sum();
    assert_eq!(enumerated, 148_838);
    assert_eq!(net.num_parameters(false), 123_040);
}

#[test]
fn dilations_and_receptive_field() {
    let cfg = ArchitectureConfig::default();
    assert_eq!(cfg.dilations(), vec![1, 2, 4, 8, 16, 32, 64, 1]);
    assert_eq!(cfg.receptive_field(8).unwrap(), 257);
    assert!(cfg.receptive_field(9).is_err());
}

#[test]
fn dense_channel_bookkeeping() {
    let cfg = ArchitectureConfig::default();
    let net = EmbeddingNet::new(cfg.clone(), 1).unwrap();
    for (idx, conv) in net.convs.iter().enumerate() {
        let n = idx + 1;
        assert_eq!(conv.in_channels, 2 + 32 * (n - 1), "layer {n}");
        assert_eq!(conv.out_channels, 32);
        assert_eq!(conv.dilation, cfg.dilation(n));
    }
    for (idx, norm) in net.pre_norms.iter().enumerate() {
        assert_eq!(norm.channels, cfg.layer_input_channels(idx + 2));
    }
    assert_eq!(net.final_norm.channels, 258);
    assert_eq!(net.embedding.in_features, 258);
    assert_eq!(net.embedding.out_features, 128);
}

#[test]
fn initialization_moments() {
    let cfg = ArchitectureConfig {
        growth_rate: 64,
        ..ArchitectureConfig::default()
    };
    let net = EmbeddingNet::new(cfg, 42).unwrap();
    let mut checked = 0;
    for conv in &net.convs {
        let fan_in = (conv.in_channels * conv.kernel) as f64;
        if fan_in < 1000.0 {
            continue;
        }
        let w = &conv.weight.value;
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let want = 2.0 / fan_in;
        assert!((var / want - 1.0).abs() < 0.1, "fan_in {fan_in}: {var} vs {want}");
        checked += 1;
    }
    assert!(checked >= 1);
    for norm in net.pre_norms.iter().chain([&net.final_norm]) {
        assert!(norm.weight.value.iter().all(|&v| v == 1.0));
        assert!(norm.bias.value.iter().all(|&v| v == 0.0));
    }
    assert!(net.embedding.bias.value.iter().all(|&v| v == 0.0));
    let bound = 1.0 / 258f64.sqrt();
    assert!(net.embedding.weight.value.iter().all(|v| v.abs() <= bound));
}

#[test]
fn same_seed_same_weights() {
    let a = EmbeddingNet::new(small(3, 4), 9).unwrap();
    let b = EmbeddingNet::new(small(3, 4), 9).unwrap();
    let c = EmbeddingNet::new(small(3, 4), 10).unwrap();
    let values = |n: &EmbeddingNet| n.params().iter().flat_map(|p| p.value.clone()).collect::<Vec<_>>();
    assert_eq!(values(&a), values(&b));
    assert_ne!(values(&a), values(&c));
}

#[test]
fn classify_without_head_is_unsupported() {
    let net = EmbeddingNet::new(small(2, 4), 0).unwrap();
    let x = vec![0.5; 2 * 32];
    assert!(matches!(net.classify(&x, 1, 32), Err(Error::Unsupported(_))));
}

#[test]
fn cyclic_shift_moves_pooled_features_by_order_one_over_t() {
    let cfg = small(2, 4);
    let net = EmbeddingNet::new(cfg, 3).unwrap();
    let mut r = rng(21);
    for trial in 0..10 {
        let len = 256 + 64 * trial;
        let x = normal_vec(&mut r, 2 * len);
        let mut shifted = x.clone();
        shifted[..len].rotate_right(1);
        shifted[len..].rotate_right(1);
        let (a, peak_a) = net.pooled_features(&x, 1, len).unwrap();
        let (b, peak_b) = net.pooled_features(&shifted, 1, len).unwrap();
        let bound = 10.0 * peak_a.max(peak_b) / len as f64;
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < bound, "T={len}: {p} vs {q} (bound {bound})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embedding_dim_is_length_independent(len in 1usize..300, batch in 1usize..4, seed in 0u64..1000) {
        let net = EmbeddingNet::new(small(3, 4), seed).unwrap();
        let x = normal_vec(&mut rng(seed), batch * 2 * len);
        let emb = net.embed(&x, batch, len).unwrap();
        prop_assert_eq!(emb.len(), batch * 16);
        prop_assert!(emb.iter().all(|v| v.is_finite()));
        prop_assert_eq!(net.embed(&x, batch, len).unwrap(), emb);
    }
}
