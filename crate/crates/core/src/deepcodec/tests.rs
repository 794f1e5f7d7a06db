use super::ktree::{compress_network_ktree, decompress_network_ktree, ktree_trace};
use super::*;
use crate::bounds::{entropy_h, log2_factorial};
use crate::coder::{elias_len, TERMINATION_BUDGET_BITS};
use crate::model::RowPermutation;
use crate::plbg::multiset_log_prob;
use crate::randgen::{gen_network, rng_from_seed, ColorDistribution};
use crate::ubg::{bipartite_iso, BinaryAdjacency, TreeEvent};
use rand::{seq::SliceRandom, Rng};

fn dist(m: u16) -> ColorDistribution {
    ColorDistribution::new(vec![1.0 / (m as f64 + 1.0); m as usize + 1]).unwrap()
}

fn random_input(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn assert_close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

/// Permutes the nodes of hidden layer `h` (rows of matrix `h - 1`, columns
/// of matrix `h`).
fn permute_hidden(net: &QuantizedNetwork, h: usize, perm: &RowPermutation) -> QuantizedNetwork {
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let mut m = layer.matrix.clone();
            if l + 1 == h {
                m = m.permute_rows(perm).unwrap();
            }
            if l == h {
                m = m.permute_cols(perm).unwrap();
            }
            (m, layer.codebook.clone())
        })
        .collect();
    QuantizedNetwork::new(layers).unwrap()
}

#[test]
fn rejects_broken_chains() {
    let cb = Codebook::uniform(1, 1.0);
    let a = ColorMatrix::zeros(3, 4, 1).unwrap();
    let b = ColorMatrix::zeros(2, 5, 1).unwrap();
    assert!(QuantizedNetwork::new(vec![(a.clone(), cb.clone()), (b, cb.clone())]).is_err());
    assert!(QuantizedNetwork::new(vec![(a, Codebook::uniform(2, 1.0))]).is_err());
    assert!(QuantizedNetwork::new(vec![]).is_err());
}

#[test]
fn single_layer_is_stored_raw() {
    let net = gen_network(&[5, 3], &dist(4), &Codebook::uniform(4, 0.16), 1).unwrap();
    let c = compress_network_plbg(&net).unwrap();
    assert_eq!(c.layers().len(), 1);
    assert_eq!(c.layers()[0].raw_matrix().unwrap(), net.layers()[0].matrix);
    let bytes = c.to_bytes();
    let back = NetworkContainer::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes(), bytes);
    assert_eq!(decompress_network(&back).unwrap(), net);
}

#[test]
fn two_layers_give_one_compressed_payload() {
    let net = gen_network(&[6, 5, 3], &dist(4), &Codebook::uniform(4, 0.16), 2).unwrap();
    let c = compress_network_plbg(&net).unwrap();
    assert_eq!(c.mode(), Mode::Plbg);
    assert!(c.layers()[0].raw_matrix().is_err());
    assert!(c.layers()[1].raw_matrix().is_ok());
}

#[test]
fn three_layer_inference_matches_dense() {
    let mut rng = rng_from_seed(3);
    let net = gen_network(&[6, 5, 4, 3], &dist(4), &Codebook::uniform(4, 0.5), 3).unwrap();
    let c = compress_network_plbg(&net).unwrap();
    for _ in 0..20 {
        let x = random_input(&mut rng, 6);
        for (g, fin) in [
            (ActivationKind::Relu, ActivationKind::Identity),
            (ActivationKind::Sigmoid, ActivationKind::Softmax),
            (ActivationKind::Identity, ActivationKind::Identity),
        ] {
            let got = infer_network(&c, &x, g, fin).unwrap();
            assert_close(&got.y, &dense_forward(&net, &x, g, fin).unwrap());
        }
    }
}

#[test]
fn zero_network_outputs_zero() {
    let cb = Codebook::uniform(2, 1.0);
    let layers = [(4, 5), (3, 4), (2, 3)]
        .iter()
        .map(|&(r, c)| (ColorMatrix::zeros(r, c, 2).unwrap(), cb.clone()))
        .collect();
    let net = QuantizedNetwork::new(layers).unwrap();
    let c = compress_network_plbg(&net).unwrap();
    let out = infer_network(
        &c,
        &[1.0, 2.0, 3.0, 4.0, 5.0],
        ActivationKind::Identity,
        ActivationKind::Identity,
    )
    .unwrap();
    assert_eq!(out.y, vec![0.0, 0.0]);
}

#[test]
fn identity_layers_preserve_order() {
    let cb = Codebook::new(vec![0.0, 1.0]).unwrap();
    let mut cells = vec![0u16; 16];
    for i in 0..4 {
        cells[i * 4 + (3 - i)] = 1;
    }
    let flip = ColorMatrix::new(4, 4, 1, cells).unwrap();
    let id = ColorMatrix::new(4, 4, 1, (0..16).map(|i| (i / 4 == i % 4) as u16).collect()).unwrap();
    let net = QuantizedNetwork::new(vec![(flip, cb.clone()), (id, cb)]).unwrap();
    let c = compress_network_plbg(&net).unwrap();
    let x = [0.5, -1.0, 2.0, 3.0];
    let out = infer_network(&c, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap();
    assert_eq!(out.y, vec![3.0, 2.0, 0.0, 0.5]);
}

#[test]
fn random_networks_agree_with_dense() {
    let mut rng = rng_from_seed(4);
    for trial in 0..100 {
        let k = 4;
        let dims: Vec<usize> = (0..=k).map(|_| rng.gen_range(1..=16)).collect();
        let m = [1u16, 4, 16][trial % 3];
        let cb = Codebook::uniform(m, 0.16);
        let net = gen_network(&dims, &dist(m), &cb, trial as u64).unwrap();
        let c = compress_network_plbg(&net).unwrap();
        let x = random_input(&mut rng, dims[0]);
        let got = infer_network(&c, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap();
        let want = dense_forward(&net, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap();
        assert_close(&got.y, &want);
        assert_eq!(argmax(&got.y), argmax(&want));
        let widest = dims[1..k].iter().max().copied().unwrap_or(1);
        assert!((got.metrics.max_bits as f64) <= crate::infer::queue_space_bound(widest, m));
        let round = decompress_network(&c).unwrap();
        assert_close(
            &dense_forward(&round, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap(),
            &want,
        );
    }
}

#[test]
fn hidden_permutations_do_not_change_payloads() {
    let mut rng = rng_from_seed(5);
    for trial in 0..60 {
        let (dims, m) = if trial % 2 == 0 {
            (vec![6, 5, 4, 3], 4u16)
        } else {
            (vec![3, 6, 6, 2], 1u16)
        };
        let net = gen_network(&dims, &dist(m), &Codebook::uniform(m, 1.0), trial).unwrap();
        let base = compress_network_plbg(&net).unwrap();
        for h in 1..dims.len() - 1 {
            let mut p: Vec<usize> = (0..dims[h]).collect();
            p.shuffle(&mut rng);
            let moved = compress_network_plbg(&permute_hidden(&net, h, &RowPermutation::new(p).unwrap())).unwrap();
            for l in 0..dims.len() - 2 {
                assert_eq!(
                    moved.layers()[l].payload,
                    base.layers()[l].payload,
                    "trial {trial} hidden {h} layer {l}"
                );
            }
        }
    }
}

#[test]
fn payloads_respect_rate_and_save_about_log_factorial() {
    let mut saving = 0.0;
    let mut predicted = 0.0;
    for seed in 0..100 {
        let net = gen_network(&[16, 16, 16, 4], &dist(4), &Codebook::uniform(4, 0.16), seed).unwrap();
        let c = compress_network_plbg(&net).unwrap();
        let decoded = decompress_network(&c).unwrap();
        for (l, rec) in c.layers()[..2].iter().enumerate() {
            let bits = (rec.payload.bit_len() - elias_len(rec.rows as u64) as u64) as f64;
            let w = &decoded.layers()[l].matrix;
            assert!(bits <= multiset_log_prob(w, &rec.model).unwrap() + TERMINATION_BUDGET_BITS);
            let h = entropy_h(&rec.model.probabilities());
            saving += (rec.rows * rec.cols) as f64 * h - bits;
            predicted += log2_factorial(rec.rows as u64);
        }
    }
    assert!(saving > 0.0);
    assert!(
        (saving - predicted).abs() < 0.15 * predicted,
        "saving {saving} vs {predicted}"
    );
}

#[test]
fn container_rejects_corruption() {
    let net = gen_network(&[5, 4, 3], &dist(2), &Codebook::uniform(2, 0.16), 9).unwrap();
    let bytes = compress_network_plbg(&net).unwrap().to_bytes();
    for cut in 0..bytes.len() {
        assert!(NetworkContainer::from_bytes(&bytes[..cut]).is_err());
    }
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(NetworkContainer::from_bytes(&longer).is_err());
    let mut rng = rng_from_seed(10);
    for _ in 0..2000 {
        let mut b = bytes.clone();
        let i = rng.gen_range(0..b.len());
        b[i] ^= 1 << rng.gen_range(0..8);
        if let Ok(c) = NetworkContainer::from_bytes(&b) {
            let _ = infer_network(&c, &[0.1; 5], ActivationKind::Relu, ActivationKind::Identity);
            let _ = decompress_network(&c);
        }
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(NetworkContainer::from_bytes(&bad), Err(Error::Format(_))));
}

#[test]
fn container_header_layout() {
    let net = gen_network(&[2, 1], &dist(1), &Codebook::new(vec![0.0, 0.25]).unwrap(), 1).unwrap();
    let bytes = network_to_raw(&net).unwrap().to_bytes();
    assert_eq!(&bytes[..4], b"QNNC");
    assert_eq!(&bytes[4..6], &[1, 0]);
    assert_eq!(bytes[6], 0);
    assert_eq!(&bytes[7..9], &[1, 0]);
    assert_eq!(&bytes[9..13], &[1, 0, 0, 0]);
    assert_eq!(&bytes[13..17], &[2, 0, 0, 0]);
    assert_eq!(&bytes[17..19], &[1, 0]);
    assert_eq!(&bytes[19..27], &0.0f64.to_le_bytes());
    assert_eq!(&bytes[27..35], &0.25f64.to_le_bytes());
    // Two count fields, the bit length, then two one-byte cells.
    assert_eq!(&bytes[51..59], &16u64.to_le_bytes());
    assert_eq!(bytes.len(), 61);
}

#[test]
fn wide_codebooks_use_two_byte_cells() {
    let m = 300u16;
    let net = gen_network(&[3, 2], &dist(m), &Codebook::uniform(m, 1.0), 1).unwrap();
    let c = network_to_raw(&net).unwrap();
    assert_eq!(c.layers()[0].payload.bytes().len(), 12);
    let back = NetworkContainer::from_bytes(&c.to_bytes()).unwrap();
    assert_eq!(decompress_network(&back).unwrap(), net);
}

fn binary_net(rng: &mut impl Rng, k: usize, n: usize, p: f64) -> QuantizedNetwork {
    let cb = Codebook::new(vec![0.0, 1.0]).unwrap();
    let layers = (0..k)
        .map(|_| {
            let cells = (0..n * n).map(|_| rng.gen_bool(p) as u16).collect();
            (ColorMatrix::new(n, n, 1, cells).unwrap(), cb.clone())
        })
        .collect();
    QuantizedNetwork::new(layers).unwrap()
}

#[test]
fn ktree_round_trip_preserves_function() {
    let mut rng = rng_from_seed(11);
    for _ in 0..50 {
        let net = binary_net(&mut rng, 2, 8, 0.5);
        let c = compress_network_ktree(&net).unwrap();
        let back = NetworkContainer::from_bytes(&c.to_bytes()).unwrap();
        let d = decompress_network(&back).unwrap();
        for _ in 0..3 {
            let x = random_input(&mut rng, 8);
            let a = dense_forward(&net, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap();
            let b = dense_forward(&d, &x, ActivationKind::Relu, ActivationKind::Identity).unwrap();
            assert_close(&a, &b);
        }
        for (x, y) in net.layers().iter().zip(d.layers()) {
            let (x, y) = (
                BinaryAdjacency::from_matrix(&x.matrix).unwrap(),
                BinaryAdjacency::from_matrix(&y.matrix).unwrap(),
            );
            assert!(bipartite_iso(&x, &y).unwrap());
        }
    }
}

#[test]
fn ktree_handles_zero_network() {
    let cb = Codebook::new(vec![0.0, 1.0]).unwrap();
    let layers = (0..3)
        .map(|_| (ColorMatrix::zeros(5, 5, 1).unwrap(), cb.clone()))
        .collect();
    let net = QuantizedNetwork::new(layers).unwrap();
    let c = compress_network_ktree(&net).unwrap();
    assert_eq!(decompress_network_ktree(&c).unwrap(), net);
    let trace = ktree_trace(&net).unwrap();
    for tree in &trace.trees {
        for e in tree {
            if let TreeEvent::Divide { parent, left, right } = *e {
                assert_eq!((left, right), (parent, 0));
            }
        }
    }
}

#[test]
fn ktree_two_layer_tree_shapes() {
    let mut rng = rng_from_seed(12);
    let net = binary_net(&mut rng, 1, 7, 0.5);
    let trace = ktree_trace(&net).unwrap();
    assert_eq!(trace.trees.len(), 2);
    let kinds = |t: &[TreeEvent]| -> Vec<bool> { t.iter().map(|e| matches!(e, TreeEvent::Select { .. })).collect() };
    // Input tree: take, divide, take, divide, ...; it never divides after
    // its last take. Output tree: divide first with no subtraction.
    let input = kinds(&trace.trees[0]);
    let output = kinds(&trace.trees[1]);
    assert!(input[0]);
    assert!(!output[0]);
    for t in [&trace.trees[0], &trace.trees[1]] {
        let selects = t.iter().filter(|e| matches!(e, TreeEvent::Select { .. })).count();
        assert_eq!(selects, 7);
        for e in t {
            if let TreeEvent::Divide { parent, left, right } = *e {
                assert_eq!(left + right, parent);
            }
        }
    }
    match trace.trees[1][0] {
        TreeEvent::Divide { parent, .. } => assert_eq!(parent, 7),
        _ => unreachable!(),
    }
}

#[test]
fn ktree_deeper_networks_round_trip() {
    let mut rng = rng_from_seed(13);
    for k in 1..=4 {
        let net = binary_net(&mut rng, k, 6, 0.3);
        let d = decompress_network_ktree(&compress_network_ktree(&net).unwrap()).unwrap();
        let x = random_input(&mut rng, 6);
        assert_close(
            &dense_forward(&net, &x, ActivationKind::Identity, ActivationKind::Identity).unwrap(),
            &dense_forward(&d, &x, ActivationKind::Identity, ActivationKind::Identity).unwrap(),
        );
    }
}

#[test]
fn ktree_rejects_unsupported_networks() {
    let net = gen_network(&[4, 4, 4], &dist(2), &Codebook::uniform(2, 1.0), 1).unwrap();
    assert!(compress_network_ktree(&net).is_err());
    let net = gen_network(&[4, 5, 4], &dist(1), &Codebook::uniform(1, 1.0), 1).unwrap();
    assert!(compress_network_ktree(&net).is_err());
}

#[test]
fn argmax_picks_first_maximum() {
    assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
    assert_eq!(argmax(&[]), None);
}
