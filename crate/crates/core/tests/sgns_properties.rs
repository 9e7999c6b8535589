use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tedge_core::sgns::{gradient_check, path_probability, sgd_step, train};
use tedge_core::{EmbeddingModel, HuffmanTree, NodeId, TrainConfig};

/// Cheapest full binary tree over the multiset `w`, by trying every pair
/// to merge (memoized on the sorted multiset). Total merge cost equals the
/// weighted code length.
fn brute_force_cost(w: Vec<u64>, memo: &mut HashMap<Vec<u64>, u64>) -> u64 {
    if w.len() <= 1 {
        return 0;
    }
    if let Some(&c) = memo.get(&w) {
        return c;
    }
    let mut best = u64::MAX;
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let merged = w[i] + w[j];
            let mut rest: Vec<u64> = w.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, &x)| x).collect();
            rest.push(merged);
            rest.sort_unstable();
            best = best.min(merged + brute_force_cost(rest, memo));
        }
    }
    memo.insert(w, best);
    best
}

fn random_tree(n: usize, rng: &mut impl Rng) -> HuffmanTree {
    let freqs: Vec<u64> = (0..n).map(|_| rng.gen_range(1..20)).collect();
    HuffmanTree::build(&freqs).unwrap()
}

#[test]
fn huffman_matches_brute_force_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut memo = HashMap::new();
    for _ in 0..200 {
        let n = rng.gen_range(2..=8);
        let freqs: Vec<u64> = (0..n).map(|_| rng.gen_range(0..30)).collect();
        if freqs.iter().all(|&f| f == 0) {
            continue;
        }
        let tree = HuffmanTree::build(&freqs).unwrap();
        let mut sorted = freqs.clone();
        sorted.sort_unstable();
        assert_eq!(tree.weighted_code_length(&freqs), brute_force_cost(sorted, &mut memo), "{freqs:?}");
    }
}

proptest! {
    #[test]
    fn huffman_codes_are_prefix_free(freqs in prop::collection::vec(0u64..50, 2..40)) {
        prop_assume!(freqs.iter().any(|&f| f > 0));
        let tree = HuffmanTree::build(&freqs).unwrap();
        let n = freqs.len();
        prop_assert_eq!(tree.leaf_count(), n);
        prop_assert_eq!(tree.internal_count(), n - 1);
        for a in 0..n {
            let ca = tree.code(NodeId(a));
            prop_assert!(!ca.is_empty());
            prop_assert_eq!(ca.len(), tree.path(NodeId(a)).len());
            prop_assert!(tree.path(NodeId(a)).iter().all(|&p| (p as usize) < n - 1));
            for b in 0..n {
                if a != b {
                    let cb = tree.code(NodeId(b));
                    prop_assert!(!(ca.len() <= cb.len() && cb[..ca.len()] == *ca));
                }
            }
        }
        // Kraft equality holds for a full binary tree
        let kraft: f64 = (0..n).map(|i| 0.5f64.powi(tree.code_length(NodeId(i)) as i32)).sum();
        prop_assert!((kraft - 1.0).abs() < 1e-12);
    }
}

#[test]
fn leaf_probabilities_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.gen_range(2..=64);
        let d = rng.gen_range(1..=16);
        let tree = random_tree(n, &mut rng);
        let model = EmbeddingModel::random(n, d, 1.0, &mut rng);
        let center = NodeId(rng.gen_range(0..n));
        let total: f64 = (0..n).map(|j| path_probability(&model, &tree, center, NodeId(j)).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9, "n={n} total={total}");
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=40);
        let d = rng.gen_range(1..=24);
        let tree = random_tree(n, &mut rng);
        let model = EmbeddingModel::random(n, d, 0.5, &mut rng);
        let (c, t) = (NodeId(rng.gen_range(0..n)), NodeId(rng.gen_range(0..n)));
        worst = worst.max(gradient_check(&model, &tree, c, t, 1e-5).unwrap());
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn zero_model_gradient_check_is_exact() {
    let tree = HuffmanTree::build(&[5, 2, 1, 1]).unwrap();
    let model = EmbeddingModel::zeros(4, 8);
    for c in 0..4 {
        for t in 0..4 {
            assert!(gradient_check(&model, &tree, NodeId(c), NodeId(t), 1e-5).unwrap() < 1e-8);
        }
    }
}

#[test]
fn finite_difference_error_is_second_order() {
    // Large enough steps that truncation, not round-off, dominates.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let n = rng.gen_range(3..=20);
        let tree = random_tree(n, &mut rng);
        let model = EmbeddingModel::random(n, 6, 1.0, &mut rng);
        let (c, t) = (NodeId(rng.gen_range(0..n)), NodeId(rng.gen_range(0..n)));
        let e1 = gradient_check(&model, &tree, c, t, 1e-3).unwrap();
        let e2 = gradient_check(&model, &tree, c, t, 2e-3).unwrap();
        let ratio = e2 / e1;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn repeated_pair_probability_increases() {
    let tree = HuffmanTree::build(&[1, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model = EmbeddingModel::random(2, 4, 0.3, &mut rng);
    let mut prev = path_probability(&model, &tree, NodeId(0), NodeId(1)).unwrap();
    for _ in 0..200 {
        sgd_step(&mut model, &tree, NodeId(0), NodeId(1), 0.1);
        let p = path_probability(&model, &tree, NodeId(0), NodeId(1)).unwrap();
        assert!(p > prev);
        prev = p;
    }
    assert!(prev > 0.99);
}

#[test]
fn sequential_training_is_bitwise_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let walks: Vec<Vec<NodeId>> = (0..60).map(|_| (0..8).map(|_| NodeId(rng.gen_range(0..15))).collect()).collect();
    let mut freqs = vec![0u64; 15];
    for w in &walks {
        for n in w {
            freqs[n.0] += 1;
        }
    }
    let tree = HuffmanTree::build(&freqs).unwrap();
    let cfg = TrainConfig { dimension: 16, epochs: 3, seed: 5, ..TrainConfig::default() };
    let a = train(&walks, &tree, &cfg).unwrap();
    let b = train(&walks, &tree, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train(&walks, &tree, &TrainConfig { seed: 6, ..cfg.clone() }).unwrap();
    assert_ne!(a, c);

    let parallel = train(&walks, &tree, &TrainConfig { workers: 4, ..cfg }).unwrap();
    assert!(parallel.is_finite());
}

#[test]
fn single_node_walks_leave_initialization_untouched() {
    let walks: Vec<Vec<NodeId>> = (0..5).map(|i| vec![NodeId(i)]).collect();
    let tree = HuffmanTree::build(&[1; 5]).unwrap();
    let cfg = TrainConfig { dimension: 8, seed: 1, ..TrainConfig::default() };
    let model = train(&walks, &tree, &cfg).unwrap();
    assert_eq!(model, EmbeddingModel::initialize(5, 8, 1));
}
