//! Shared fixtures for the benchmarks.

use hyperdev::{ErModel, SymTensor};

/// Centered sample A − pJ for A ~ μ_p.
pub fn centered_sample(n: usize, r: usize, p: f64, seed: u64) -> SymTensor {
    ErModel::scalar(n, r, p).expect("valid model").sample(seed).map(|x| x - p)
}
