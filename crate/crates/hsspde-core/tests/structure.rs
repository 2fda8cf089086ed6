//! Structural invariants of the HSS representation.

use hsspde_core::{ClusterTree, Hss, Mat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / (1.0 + den)
}

/// Draws a random but valid (d, depth, rank) configuration.
fn random_config(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    loop {
        let depth = rng.random_range(0..=4usize);
        let rank = rng.random_range(1..=8usize);
        let leaf = rank.max(rng.random_range(1..=12usize));
        let d = leaf << depth;
        if d <= 256 {
            return (d, depth, rank);
        }
    }
}

#[test]
fn matvec_agrees_with_dense_on_random_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..60 {
        let (d, depth, rank) = random_config(&mut rng);
        let tree = ClusterTree::balanced(d, depth).unwrap();
        let h = Hss::random(tree, rank, rng.random(), 1.0).unwrap();
        let dense = h.to_dense();
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let fast = h.matvec(&x).unwrap();
        let slow = dense.matvec(&x).unwrap();
        let num: f64 = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let xn: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound = 1e-12 * (1.0 + dense.frobenius_norm() * xn);
        assert!(
            num <= bound,
            "case {case}: d={d} depth={depth} rank={rank}: |fast-slow| = {num:e} > {bound:e}"
        );
    }
}

#[test]
fn matvec_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (d, depth, rank) = random_config(&mut rng);
        let tree = ClusterTree::balanced(d, depth).unwrap();
        let h = Hss::random(tree, rank, rng.random(), 1.0).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let (a, b) = (rng.random::<f64>() * 3.0 - 1.5, rng.random::<f64>() * 3.0 - 1.5);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = h.matvec(&combo).unwrap();
        let hx = h.matvec(&x).unwrap();
        let hy = h.matvec(&y).unwrap();
        let rhs: Vec<f64> = hx.iter().zip(&hy).map(|(u, v)| a * u + b * v).collect();
        assert!(rel_err(&lhs, &rhs) <= 1e-12);
    }
}

#[test]
fn storage_grows_near_linearly_with_dimension() {
    // Leaf size fixed at 2r; the log-log slope over d in {64,...,512} must
    // stay below 1.1, and doubling d at constant leaf size grows the count
    // by at most 2.2x.
    let rank = 2usize;
    let leaf = 2 * rank;
    let mut points = Vec::new();
    for d in [64usize, 128, 256, 512] {
        let depth = (d / leaf).trailing_zeros() as usize;
        let tree = ClusterTree::balanced(d, depth).unwrap();
        let h = Hss::zeros(tree, rank).unwrap();
        points.push((d as f64, h.param_count() as f64));
    }
    for w in points.windows(2) {
        assert!(w[1].1 / w[0].1 <= 2.2, "count jump {} -> {}", w[0].1, w[1].1);
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (d, c) in &points {
        let (x, y) = (d.ln(), c.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(slope <= 1.1, "storage exponent {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compression_round_trips_exact_hss_matrices(
        depth in 1..=3usize,
        rank in 1..=3usize,
        extra in 0..=4usize,
        seed in any::<u64>(),
    ) {
        let leaf = rank + extra;
        let d = leaf << depth;
        let tree = ClusterTree::balanced(d, depth).unwrap();
        let h = Hss::random(tree, rank, seed, 1.0).unwrap();
        let dense = h.to_dense();
        let back = Hss::from_dense(&dense, tree, rank).unwrap().to_dense();
        let err = back.sub(&dense).frobenius_norm() / dense.frobenius_norm();
        prop_assert!(err <= 1e-10, "round trip error {}", err);
    }

    #[test]
    fn batch_matvec_bitwise_equals_loop(
        seed in any::<u64>(),
        cols in 1..=6usize,
    ) {
        let tree = ClusterTree::balanced(32, 3).unwrap();
        let h = Hss::random(tree, 2, seed, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let x = Mat::from_fn(32, cols, |_, _| rng.random::<f64>() - 0.5);
        let batch = h.matvec_batch(&x).unwrap();
        for b in 0..cols {
            let col: Vec<f64> = (0..32).map(|i| x[(i, b)]).collect();
            let y = h.matvec(&col).unwrap();
            for i in 0..32 {
                prop_assert_eq!(batch[(i, b)], y[i]);
            }
        }
    }
}
