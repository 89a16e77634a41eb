//! Benchmark fixtures. Shared types come straight from the core crate.

pub use archboost::{BoostConfig, Dataset, Ensemble, Loss, TreeConfig};

/// Hastie data of size `n` with a fixed seed, so runs are comparable.
pub fn hastie(n: usize) -> Dataset {
    archboost::datagen::gen_hastie(n, 17)
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}
