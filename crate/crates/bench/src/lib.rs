//! Fixed workloads shared by the criterion benches.

use allknn::{generate, Distribution, PointSet};

pub const SEED: u64 = 20240917;

/// Sizes used by the scaling benches.
pub const SIZES: [usize; 3] = [1000, 4000, 16000];

pub fn uniform(n: usize, d: usize) -> PointSet {
    generate(n, d, Distribution::Uniform, SEED).expect("valid workload")
}

pub fn clustered(n: usize, d: usize) -> PointSet {
    generate(n, d, Distribution::Clustered { clusters: 10 }, SEED).expect("valid workload")
}
