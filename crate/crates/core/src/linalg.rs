//! Dense linear-algebra helpers on top of nalgebra; singular value
//! decompositions go through faer.

use nalgebra::{DMatrix, DVector, Scalar};
use num_complex::Complex64;

use crate::error::{RatexError, Result};

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m).singular_values().unwrap_or_else(|_| vec![f64::NAN; m.nrows().min(m.ncols())])
}

/// Singular values of a complex matrix, descending.
pub fn complex_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m).singular_values().unwrap_or_else(|_| vec![f64::NAN; m.nrows().min(m.ncols())])
}

fn to_faer<T: Scalar + Copy>(m: &DMatrix<T>) -> faer::Mat<T> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Cutoff `tol * scale * max(rows, cols)` used to count singular values.
pub fn rank_threshold(scale: f64, rows: usize, cols: usize, tol: f64) -> f64 {
    tol * scale * rows.max(cols) as f64
}

/// Number of singular values strictly above the threshold derived from `scale`.
pub fn numerical_rank_with_scale(sv: &[f64], scale: f64, rows: usize, cols: usize, tol: f64) -> usize {
    let cut = rank_threshold(scale, rows, cols, tol);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Numerical rank relative to the largest singular value.
pub fn numerical_rank(sv: &[f64], rows: usize, cols: usize, tol: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    numerical_rank_with_scale(sv, smax, rows, cols, tol)
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `M ⊗ I_n`, built without forming the identity.
pub fn kron_identity(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(r * n, c * n);
    for i in 0..r {
        for j in 0..c {
            let s = m[(i, j)];
            if s != 0.0 {
                for k in 0..n {
                    out[(i * n + k, j * n + k)] = s;
                }
            }
        }
    }
    out
}

/// Stack matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r0, 0), b.shape()).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// Parlett–Reinsch diagonal similarity balancing (powers of two, no permutation).
pub fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    const RADIX: f64 = 2.0;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let g = r / RADIX;
            while cc < g {
                f *= RADIX;
                cc *= RADIX * RADIX;
            }
            let g = r * RADIX;
            while cc > g {
                f /= RADIX;
                cc /= RADIX * RADIX;
            }
            if (cc + r / f) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Zeros of `c[0] + c[1] z + ... + c[d] z^d` via the balanced companion matrix.
///
/// Leading coefficients must already be trimmed; `c[d]` is assumed non-zero.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let d = c.len().saturating_sub(1);
    if d == 0 {
        return Vec::new();
    }
    let lead = c[d];
    let mut comp = DMatrix::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -c[i] / lead;
    }
    balance(&mut comp);
    let mut roots = eigenvalues(&comp);
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    roots
}

/// Matrix sign function by scaled Newton iteration.
///
/// Fails when an iterate becomes singular, i.e. when the spectrum touches the
/// imaginary axis.
pub fn matrix_sign(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let mut x = k.clone();
    let mut scaled = true;
    for _ in 0..200 {
        let lu = x.clone().lu();
        let inv = lu.try_inverse().ok_or(RatexError::ZerosOnUnitCircle { closest_modulus: 1.0 })?;
        let next = if scaled {
            let det = x.clone().lu().determinant().abs();
            let mu = if det.is_finite() && det > 0.0 { det.powf(-1.0 / n as f64) } else { 1.0 };
            (&x * mu + &inv / mu) * 0.5
        } else {
            (&x + &inv) * 0.5
        };
        if !next.iter().all(|v| v.is_finite()) {
            return Err(RatexError::ZerosOnUnitCircle { closest_modulus: 1.0 });
        }
        let diff = (&next - &x).abs().row_sum().max();
        let size = next.abs().row_sum().max();
        x = next;
        if diff <= 1e-3 * size {
            scaled = false;
        }
        if diff <= 1e-14 * size.max(1.0) {
            return Ok(x);
        }
    }
    // Slow convergence means eigenvalues close to the axis; accept the iterate
    // only if it squares to the identity.
    let err = (&x * &x - DMatrix::identity(n, n)).abs().max();
    if err < 1e-8 {
        Ok(x)
    } else {
        Err(RatexError::ZerosOnUnitCircle { closest_modulus: 1.0 })
    }
}

/// Orthonormal basis of the column space of `m` with the given dimension,
/// plus all singular values (descending).
pub fn range_basis(m: &DMatrix<f64>, dim: usize) -> (DMatrix<f64>, Vec<f64>) {
    let Ok(svd) = to_faer(m).thin_svd() else {
        return (DMatrix::zeros(m.nrows(), dim), vec![f64::NAN; m.nrows().min(m.ncols())]);
    };
    let u = svd.U();
    let basis = DMatrix::from_fn(m.nrows(), dim, |i, j| u[(i, j)]);
    let sv = (0..m.nrows().min(m.ncols())).map(|i| svd.S()[i]).collect();
    (basis, sv)
}

/// Reciprocal 2-norm condition number.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().lu().solve(b)
}

pub fn column_vec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
