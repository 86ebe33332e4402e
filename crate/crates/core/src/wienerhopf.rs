//! Wiener–Hopf factorization `B = B_minus * B_plus` with zero partial indices.
//!
//! `B_minus` is a polynomial in `z^{-1}` with `B_minus(∞) = I` and all zeros
//! of `det(z^λ B_minus)` strictly inside the unit circle; `B_plus` is a
//! polynomial in `z` with all zeros of `det B_plus` strictly outside.
//!
//! The monic factor `z^λ B_minus(z)` is a left divisor of `P(z) = z^λ B(z)`.
//! After transposition it becomes a right divisor, which is read off the
//! deflating subspace of the block companion pencil of `P^T` belonging to the
//! eigenvalues inside the unit circle. That subspace is obtained from a
//! Cayley transform of the pencil followed by the matrix sign function, which
//! copes with a singular leading coefficient (infinite eigenvalues map to 1).
//! `B_plus` then follows from `[B_minus^{-1} B]_+`, which is exact because the
//! quotient is polynomial.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{RatexError, Result};
use crate::linalg::{matrix_sign, range_basis, rcond};
use crate::polylab::{lp_det_and_zeros, lp_mul, LaurentMatrix};
use crate::resolve::plus_part_of_bminus_inv_a;
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone)]
pub struct WHFactors {
    /// `I + F_1 z^{-1} + ... + F_λ z^{-λ}`, stored over lags `-λ..=0`.
    pub b_minus: LaurentMatrix,
    /// `G_0 + G_1 z + ... + G_κ z^κ`, stored over lags `0..=κ`.
    pub b_plus: LaurentMatrix,
    /// Max-abs coefficient of `B - B_minus B_plus`.
    pub residual: f64,
    /// Zeros of `det(z^λ B(z))`, sorted by modulus.
    pub zeros: Vec<Complex64>,
    pub lambda: usize,
    pub kappa: usize,
}

impl WHFactors {
    pub fn stable_zero_count(&self) -> usize {
        self.zeros.iter().filter(|z| z.norm() < 1.0).count()
    }
}

/// Outcome of [`check_eu`]: whether a unique stationary solution exists.
#[derive(Debug, Clone)]
pub struct EuDiagnostic {
    pub holds: bool,
    pub zeros: Vec<Complex64>,
    pub stable_count: usize,
    pub expected_stable: usize,
    pub failure: Option<RatexError>,
}

/// Effective lag bounds of a non-zero square Laurent matrix.
fn lag_bounds(b: &LaurentMatrix) -> (usize, usize) {
    let t = b.trimmed();
    ((-t.min_lag()).max(0) as usize, t.max_lag().max(0) as usize)
}

/// Zeros of `det(z^λ B(z))` including the origin zeros contributed when
/// `B` has no negative lags but a vanishing low-order part.
fn shifted_zeros(b: &LaurentMatrix, lambda: usize) -> Result<Vec<Complex64>> {
    let p = b.trimmed().shift(lambda as i32);
    let det = lp_det_and_zeros(&p)?;
    let mut zeros = vec![Complex64::new(0.0, 0.0); b.rows() * p.min_lag().max(0) as usize];
    zeros.extend(det.zeros);
    zeros.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(zeros)
}

fn classify(zeros: &[Complex64], n: usize, lambda: usize, tol: &ToleranceConfig) -> Result<usize> {
    if let Some(z) = zeros.iter().min_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs())) {
        if (z.norm() - 1.0).abs() <= tol.boundary {
            return Err(RatexError::ZerosOnUnitCircle { closest_modulus: z.norm() });
        }
    }
    let stable = zeros.iter().filter(|z| z.norm() < 1.0).count();
    if stable != n * lambda {
        return Err(RatexError::WrongStableCount { expected: n * lambda, found: stable });
    }
    Ok(stable)
}

/// Computes the normalized Wiener–Hopf factors of a square Laurent matrix.
pub fn wh_factorize(b: &LaurentMatrix, tol: &ToleranceConfig) -> Result<WHFactors> {
    let (n, nc) = b.shape();
    if n != nc {
        return Err(RatexError::ShapeMismatch { op: "wh_factorize", left: b.shape(), right: b.shape() });
    }
    let bt = b.trimmed();
    if bt.is_zero() {
        return Err(RatexError::SingularDeterminant);
    }
    let (lambda, kappa) = lag_bounds(&bt);
    let zeros = shifted_zeros(&bt, lambda)?;
    classify(&zeros, n, lambda, tol)?;

    let b_minus = if lambda == 0 {
        LaurentMatrix::identity(n)
    } else if kappa == 0 {
        let g0 = bt.coeff(0);
        let g0_inv = g0.clone().try_inverse().ok_or(RatexError::DivisorExtractionSingular { rcond: 0.0 })?;
        bt.mul_const_right(&g0_inv)?
    } else {
        monic_left_divisor(&bt, lambda, kappa)?
    };
    let b_minus = b_minus.with_lag_window(-(lambda as i32), 0)?;
    let b_minus = force_identity_origin(b_minus, n);

    let b_plus = if lambda == 0 { bt.clone() } else { plus_part_of_bminus_inv_a(&b_minus, &bt)? };
    let b_plus = b_plus.with_lag_window(0, kappa as i32)?;

    let recon = lp_mul(&b_minus, &b_plus)?;
    let residual = bt.max_abs_diff(&recon);
    let limit = tol.reconstruction * bt.scale().max(1.0);
    if residual > limit {
        return Err(RatexError::ReconstructionFailed { residual, limit });
    }
    Ok(WHFactors { b_minus, b_plus, residual, zeros, lambda, kappa })
}

/// Sets the lag-0 coefficient to the identity exactly.
fn force_identity_origin(bm: LaurentMatrix, n: usize) -> LaurentMatrix {
    let lo = bm.min_lag();
    let mut coeffs = bm.coeffs().to_vec();
    let idx = (0 - lo) as usize;
    coeffs[idx] = DMatrix::identity(n, n);
    LaurentMatrix::new(n, n, lo, coeffs).expect("shape preserved")
}

/// Extracts `B_minus` for `λ >= 1`, `κ >= 1`.
fn monic_left_divisor(b: &LaurentMatrix, lambda: usize, kappa: usize) -> Result<LaurentMatrix> {
    let n = b.rows();
    let d = lambda + kappa;
    let dim = n * d;
    let k = n * lambda;

    // Coefficients of M(z) = (z^λ B(z))^T = Σ_{j=0}^{d} M_j z^j.
    let mcoef: Vec<DMatrix<f64>> = (0..=d).map(|j| b.coeff(j as i32 - lambda as i32).transpose()).collect();

    // First companion pencil A - μE acting on [x; μx; ...; μ^{d-1}x].
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut e = DMatrix::<f64>::identity(dim, dim);
    for blk in 0..d - 1 {
        for i in 0..n {
            a[(blk * n + i, (blk + 1) * n + i)] = 1.0;
        }
    }
    for (j, mj) in mcoef.iter().take(d).enumerate() {
        a.view_mut(((d - 1) * n, j * n), (n, n)).copy_from(&(-mj));
    }
    e.view_mut(((d - 1) * n, (d - 1) * n), (n, n)).copy_from(&mcoef[d]);

    // Cayley transform K = (A - sE)^{-1}(A + sE) maps |μ| < 1 to Re < 0 and
    // μ = ∞ to 1. Pick the better conditioned of s = ±1.
    let candidates = [1.0, -1.0].map(|s| {
        let lhs = &a - &e * s;
        (rcond(&lhs), s, lhs)
    });
    let (rc, s, lhs) = candidates.into_iter().max_by(|x, y| x.0.total_cmp(&y.0)).expect("two candidates");
    if rc < 1e-14 {
        return Err(RatexError::ZerosOnUnitCircle { closest_modulus: 1.0 });
    }
    let rhs = &a + &e * s;
    let kmat = lhs.lu().solve(&rhs).ok_or(RatexError::ZerosOnUnitCircle { closest_modulus: 1.0 })?;
    // c = (μ + s)/(μ - s) sends the open unit disk to Re(c) < 0 for s = ±1.
    let sign = matrix_sign(&kmat)?;
    let projector = (DMatrix::identity(dim, dim) - &sign) * 0.5;
    let (basis, sv) = range_basis(&projector, k);
    let captured = sv.get(k - 1).copied().unwrap_or(0.0);
    let leaked = sv.get(k).copied().unwrap_or(0.0);
    if captured < 0.5 || leaked > 1e-6 {
        let found = sv.iter().filter(|&&v| v > 0.5).count();
        return Err(RatexError::WrongStableCount { expected: k, found });
    }

    // Block rows: V_i = X J^i S. W = col(V_0..V_{λ-1}); [L_0..L_{λ-1}] = -V_λ W^{-1}.
    let w = basis.rows(0, k).into_owned();
    let w_rc = rcond(&w);
    if w_rc < 1e-12 {
        return Err(RatexError::DivisorExtractionSingular { rcond: w_rc });
    }
    let v_lambda = basis.rows(k, n).into_owned();
    // Solve L W = -V_λ via W^T L^T = -V_λ^T.
    let lt = w.transpose().lu().solve(&(-v_lambda.transpose())).ok_or(RatexError::DivisorExtractionSingular { rcond: w_rc })?;
    let l = lt.transpose();

    // Q(z) = z^λ B_minus(z) = L(z)^T, so the z^i coefficient L_i^T equals F_{λ-i}.
    let mut coeffs = Vec::with_capacity(lambda + 1);
    for lag in -(lambda as i32)..=0 {
        if lag == 0 {
            coeffs.push(DMatrix::identity(n, n));
        } else {
            let i = (lambda as i32 + lag) as usize;
            coeffs.push(l.columns(i * n, n).transpose());
        }
    }
    LaurentMatrix::new(n, n, -(lambda as i32), coeffs)
}

/// True iff `B` admits the factorization; the diagnostic carries the zeros.
pub fn check_eu(b: &LaurentMatrix, tol: &ToleranceConfig) -> EuDiagnostic {
    let bt = b.trimmed();
    let (lambda, _) = if bt.is_zero() { (0, 0) } else { lag_bounds(&bt) };
    let n = b.rows();
    let zeros = if bt.is_zero() || b.rows() != b.cols() { Vec::new() } else { shifted_zeros(&bt, lambda).unwrap_or_default() };
    let stable_count = zeros.iter().filter(|z| z.norm() < 1.0).count();
    match wh_factorize(b, tol) {
        Ok(_) => EuDiagnostic { holds: true, zeros, stable_count, expected_stable: n * lambda, failure: None },
        Err(e) => EuDiagnostic { holds: false, zeros, stable_count, expected_stable: n * lambda, failure: Some(e) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;

    fn sc(min: i32, c: &[f64]) -> LaurentMatrix {
        LaurentMatrix::scalar(min, c).unwrap()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn scalar_three_term_closed_form() {
        let f = wh_factorize(&sc(-1, &[1.0 / 3.0, 1.0, 0.5]), &tol()).unwrap();
        let b0 = (3.0 + 3f64.sqrt()) / 6.0;
        let bm = -1.0 / (3.0 * b0);
        let bp = -1.0 / (2.0 * b0);
        assert!((f.b_minus.coeff(-1)[(0, 0)] + bm).abs() < 1e-12);
        assert_eq!(f.b_minus.coeff(0)[(0, 0)], 1.0);
        assert!((f.b_plus.coeff(0)[(0, 0)] - b0).abs() < 1e-12);
        assert!((f.b_plus.coeff(1)[(0, 0)] + b0 * bp).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn quadratic_roots_split() {
        let f = wh_factorize(&sc(-1, &[1.0, -2.5, 1.0]), &tol()).unwrap();
        assert!((f.b_minus.coeff(-1)[(0, 0)] + 0.5).abs() < 1e-12);
        assert!((f.b_plus.coeff(0)[(0, 0)] + 2.0).abs() < 1e-12);
        assert!((f.b_plus.coeff(1)[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn varma_case_is_trivial() {
        let b = LaurentMatrix::new(
            2,
            2,
            0,
            vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]), DMatrix::from_row_slice(2, 2, &[-0.5, 0.1, 0.3, 0.2])],
        )
        .unwrap();
        let f = wh_factorize(&b, &tol()).unwrap();
        assert_eq!(f.b_minus.coeffs().len(), 1);
        assert_eq!(f.b_minus.coeff(0), DMatrix::identity(2, 2));
        assert_eq!(f.b_plus, b);
    }

    #[test]
    fn unit_circle_zero_is_rejected() {
        let err = wh_factorize(&sc(0, &[1.0, -1.0]), &tol()).unwrap_err();
        assert!(matches!(err, RatexError::ZerosOnUnitCircle { .. }));
        assert!(!check_eu(&sc(0, &[1.0, -1.0]), &tol()).holds);
    }

    #[test]
    fn nonzero_partial_index_is_rejected() {
        // Both zeros of z^2 - 2.5 z + 1 shifted: z^-1 (z - 0.5)(z - 0.25) has two stable zeros.
        let err = wh_factorize(&sc(-1, &[0.125, -0.75, 1.0]), &tol()).unwrap_err();
        assert!(matches!(err, RatexError::WrongStableCount { expected: 1, found: 2 }));
    }

    #[test]
    fn pure_forward_matrix() {
        // kappa = 0: B = I + F z^-1 with a stable F.
        let f1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let g0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.5]);
        let bm = LaurentMatrix::new(2, 2, -1, vec![f1, DMatrix::identity(2, 2)]).unwrap();
        let b = lp_mul(&bm, &LaurentMatrix::constant(g0.clone())).unwrap();
        let f = wh_factorize(&b, &tol()).unwrap();
        assert!(f.b_minus.max_abs_diff(&bm) < 1e-12);
        assert!((f.b_plus.coeff(0) - g0).abs().max() < 1e-12);
    }

    #[test]
    fn matrix_case_recovers_factors() {
        let f1 = DMatrix::from_row_slice(2, 2, &[0.2, -0.1, 0.3, 0.25]);
        let g0 = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.4, 0.9]);
        let g1 = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.05, -0.3]);
        let bm = LaurentMatrix::new(2, 2, -1, vec![f1, DMatrix::identity(2, 2)]).unwrap();
        let bp = LaurentMatrix::new(2, 2, 0, vec![g0, g1]).unwrap();
        let b = lp_mul(&bm, &bp).unwrap();
        let f = wh_factorize(&b, &tol()).unwrap();
        assert!(f.b_minus.max_abs_diff(&bm) < 1e-10, "{:?}", f.b_minus);
        assert!(f.b_plus.max_abs_diff(&bp) < 1e-10);
        assert_eq!(f.stable_zero_count(), 2);
        assert!(!singular_values(&f.b_plus.coeff(0)).is_empty());
    }
}
