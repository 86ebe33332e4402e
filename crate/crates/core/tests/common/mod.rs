#![allow(dead_code)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ratex_core::random_models::random_model_with_factors;
use ratex_core::{LaurentMatrix, Model, ToleranceConfig};

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

pub fn sc(min: i32, c: &[f64]) -> LaurentMatrix {
    LaurentMatrix::scalar(min, c).unwrap()
}

pub fn scalar_model(bmin: i32, b: &[f64], a: &[f64], lambda: usize, kappa: usize) -> Model {
    Model::new(sc(bmin, b), sc(0, a), lambda, kappa).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub n: usize,
    pub m: usize,
    pub lambda: usize,
    pub kappa: usize,
    pub seed: u64,
}

impl Shape {
    pub fn build(&self) -> (Model, LaurentMatrix, LaurentMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        random_model_with_factors(&mut rng, self.n, self.m, self.lambda, self.kappa)
    }

    pub fn model(&self) -> Model {
        self.build().0
    }
}

/// Random EU-satisfying model shapes (n, m ≤ `max_nm`, lags ≤ 2).
pub fn shapes(max_nm: usize) -> impl Strategy<Value = Shape> {
    (1..=max_nm, 1..=max_nm, 0..=2usize, 0..=2usize, any::<u64>()).prop_map(|(n, m, lambda, kappa, seed)| Shape {
        n,
        m,
        lambda,
        kappa,
        seed,
    })
}

pub fn laurent(rows: usize, cols: usize) -> impl Strategy<Value = LaurentMatrix> {
    (-2..=0i32, 1..=3usize).prop_flat_map(move |(lo, len)| {
        proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, rows * cols), len).prop_map(move |cs| {
            let coeffs = cs.into_iter().map(|v| nalgebra::DMatrix::from_vec(rows, cols, v)).collect();
            LaurentMatrix::new(rows, cols, lo, coeffs).unwrap()
        })
    })
}
