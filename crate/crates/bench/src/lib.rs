//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ratex_core::random_models::random_model;
use ratex_core::Model;

/// Deterministic random model of the given shape.
pub fn fixture(n: usize, m: usize, lambda: usize, kappa: usize, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_model(&mut rng, n, m, lambda, kappa)
}

/// Benchmark shapes `(n, m, lambda, kappa)`.
pub const SHAPES: &[(usize, usize, usize, usize)] = &[(1, 1, 1, 1), (2, 2, 1, 2), (4, 2, 2, 2), (6, 3, 2, 3)];
