//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's clustering or matching code.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// `J` of a labelling of 1-D points with every centre at its cluster mean.
/// Returns `None` if some cluster is empty.
pub fn oracle_j_1d(points: &[f64], labels: &[usize], k: usize) -> Option<f64> {
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (&x, &l) in points.iter().zip(labels) {
        sum[l] += x;
        count[l] += 1;
    }
    if count.contains(&0) {
        return None;
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    Some(
        points
            .iter()
            .zip(labels)
            .map(|(&x, &l)| (x - mean[l]).abs())
            .sum(),
    )
}

/// Every labelling of `n` points into `k` clusters, in base-`k` counting order.
pub fn all_labelings(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total).map(move |mut code| {
        (0..n)
            .map(|_| {
                let l = code % k;
                code /= k;
                l
            })
            .collect()
    })
}

/// Global minimum of `J` over labellings with no empty cluster.
pub fn exhaustive_min_j(points: &[f64], k: usize) -> f64 {
    all_labelings(points.len(), k)
        .filter_map(|l| oracle_j_1d(points, &l, k))
        .fold(f64::INFINITY, f64::min)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Accuracy maximised over all `k!` relabellings of the predictions.
pub fn brute_force_accuracy(predicted: &[usize], truth: &[usize], k: usize) -> f64 {
    let best = permutations(k)
        .iter()
        .map(|perm| {
            predicted
                .iter()
                .zip(truth)
                .filter(|(&p, &t)| perm[p] == t)
                .count()
        })
        .max()
        .unwrap_or(0);
    best as f64 / truth.len() as f64
}

/// The fixed suite of small 1-D instances: 20 instances, `N` in 4..=8,
/// `K` in 1..=3, points uniform on [0, 10).
pub fn small_instances() -> Vec<(Vec<f64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20)
        .map(|i| {
            let n = rng.random_range(4..=8usize);
            let k = if i < 2 {
                1 + i
            } else {
                rng.random_range(2..=3usize)
            };
            let points = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            (points, k)
        })
        .collect()
}
