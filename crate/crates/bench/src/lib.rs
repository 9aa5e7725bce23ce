//! Fixtures shared by the benchmarks.

use tomonoise::{sample_homodyne, Dataset, StateSpec};

pub const FIXTURE_SEED: u64 = 2024;

/// Homodyne record of a coherent state with `nbar = 4` at `eta = 0.8`.
pub fn coherent_dataset(n: usize) -> Dataset {
    sample_homodyne(&StateSpec::coherent_real(2.0), 0.8, n, FIXTURE_SEED).expect("valid fixture")
}

/// Evenly spaced points on `[-5, 5]`.
pub fn grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -5.0 + 10.0 * i as f64 / (points - 1) as f64)
        .collect()
}
