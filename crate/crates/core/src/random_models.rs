//! Random models that satisfy the existence/uniqueness condition by
//! construction, for tests and benchmarks.
//!
//! `B_minus = I + Σ F_i z^{-i}` with `Σ ‖F_i‖ < 1` is invertible for
//! `|z| >= 1`; `B_plus = G_0 (I + Σ G_0^{-1} G_i z^i)` with
//! `Σ ‖G_0^{-1} G_i‖ < 1` is invertible for `|z| <= 1`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::singular_values;
use crate::polylab::{lp_mul, LaurentMatrix, Model};

/// Bound on `Σ ‖F_i‖` and `Σ ‖G_0^{-1} G_i‖`; keeps zeros away from `|z| = 1`.
pub const CONTRACTION: f64 = 0.8;

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m)[0]
}

/// Matrices `X_1..X_k` with `Σ ‖X_i‖ = total`, random relative weights.
fn contraction_family<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, total: f64) -> Vec<DMatrix<f64>> {
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| {
            let g = gaussian(rng, n, n);
            let nrm = spectral_norm(&g).max(1e-12);
            g * (total * w / wsum / nrm)
        })
        .collect()
}

/// Well-conditioned `G_0`: orthogonal times a diagonal with entries in `[0.5, 2]`.
fn well_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let q = gaussian(rng, n, n).qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0)));
    q * d
}

/// `B_minus` over lags `-λ..=0` with identity lag-0 coefficient.
pub fn random_b_minus<R: Rng + ?Sized>(rng: &mut R, n: usize, lambda: usize) -> LaurentMatrix {
    let mut f = contraction_family(rng, n, lambda, CONTRACTION);
    f.reverse();
    f.push(DMatrix::identity(n, n));
    LaurentMatrix::new(n, n, -(lambda as i32), f).expect("valid shapes")
}

/// `B_plus` over lags `0..=κ` with zeros outside the closed unit disk.
pub fn random_b_plus<R: Rng + ?Sized>(rng: &mut R, n: usize, kappa: usize) -> LaurentMatrix {
    let g0 = well_conditioned(rng, n);
    let mut coeffs = vec![g0.clone()];
    coeffs.extend(contraction_family(rng, n, kappa, CONTRACTION).into_iter().map(|h| &g0 * h));
    LaurentMatrix::new(n, n, 0, coeffs).expect("valid shapes")
}

/// Random model with `B = B_minus B_plus` and Gaussian `A`, together with
/// the factors it was built from.
pub fn random_model_with_factors<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    lambda: usize,
    kappa: usize,
) -> (Model, LaurentMatrix, LaurentMatrix) {
    let bm = random_b_minus(rng, n, lambda);
    let bp = random_b_plus(rng, n, kappa);
    let b = lp_mul(&bm, &bp).expect("conformable");
    let a = LaurentMatrix::new(n, m, 0, (0..=kappa).map(|_| gaussian(rng, n, m)).collect()).expect("valid shapes");
    let model = Model::new(b, a, lambda, kappa).expect("lags within bounds");
    (model, bm, bp)
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, lambda: usize, kappa: usize) -> Model {
    random_model_with_factors(rng, n, m, lambda, kappa).0
}
