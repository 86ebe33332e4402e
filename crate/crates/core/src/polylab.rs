//! Real Laurent polynomial matrices with exact lag bookkeeping.
//!
//! A [`LaurentMatrix`] stores `Σ_{k=min_lag}^{max_lag} M_k z^k` as a dense
//! coefficient sequence. Arithmetic results are returned in trimmed form: the
//! outermost coefficient matrices are non-zero unless the whole matrix is zero.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{RatexError, Result};
use crate::linalg::{max_abs, poly_roots};

/// Relative threshold under which a coefficient matrix counts as zero.
pub const TRIM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrix {
    rows: usize,
    cols: usize,
    min_lag: i32,
    coeffs: Vec<DMatrix<f64>>,
}

impl LaurentMatrix {
    /// Builds a matrix from coefficients at lags `min_lag, min_lag + 1, ...`.
    ///
    /// The result is not trimmed; call [`LaurentMatrix::trimmed`] for that.
    pub fn new(rows: usize, cols: usize, min_lag: i32, coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(RatexError::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(RatexError::InvalidArgument("at least one coefficient matrix is required".into()));
        }
        for c in &coeffs {
            if c.shape() != (rows, cols) {
                return Err(RatexError::ShapeMismatch { op: "LaurentMatrix::new", left: (rows, cols), right: c.shape() });
            }
            if !c.iter().all(|v| v.is_finite()) {
                return Err(RatexError::NonFinite);
            }
        }
        Ok(Self { rows, cols, min_lag, coeffs })
    }

    /// Builds a 1×1 matrix from scalar coefficients at lags `min_lag, ...`.
    pub fn scalar(min_lag: i32, coeffs: &[f64]) -> Result<Self> {
        let mats = coeffs.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect();
        Self::new(1, 1, min_lag, mats)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, min_lag: 0, coeffs: vec![DMatrix::zeros(rows, cols)] }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        Self { rows, cols, min_lag: 0, coeffs: vec![m] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn min_lag(&self) -> i32 {
        self.min_lag
    }

    pub fn max_lag(&self) -> i32 {
        self.min_lag + self.coeffs.len() as i32 - 1
    }

    /// Coefficient matrices in lag order.
    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// Coefficient at `lag`, zero outside the stored range.
    pub fn coeff(&self, lag: i32) -> DMatrix<f64> {
        self.coeff_ref(lag).cloned().unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    pub fn coeff_ref(&self, lag: i32) -> Option<&DMatrix<f64>> {
        if lag < self.min_lag || lag > self.max_lag() {
            None
        } else {
            self.coeffs.get((lag - self.min_lag) as usize)
        }
    }

    /// Largest absolute entry over all coefficients.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.scale() == 0.0
    }

    /// Drops outer coefficient matrices whose max-abs entry is at most
    /// `TRIM_TOL * max(1, scale)`.
    pub fn trimmed(&self) -> Self {
        self.trimmed_with(TRIM_TOL)
    }

    pub fn trimmed_with(&self, tol: f64) -> Self {
        let cut = tol * self.scale().max(1.0);
        let nz: Vec<usize> = (0..self.coeffs.len()).filter(|&i| max_abs(&self.coeffs[i]) > cut).collect();
        match (nz.first(), nz.last()) {
            (Some(&lo), Some(&hi)) => Self {
                rows: self.rows,
                cols: self.cols,
                min_lag: self.min_lag + lo as i32,
                coeffs: self.coeffs[lo..=hi].to_vec(),
            },
            _ => Self::zeros(self.rows, self.cols),
        }
    }

    /// Same polynomial stored over the lag window `lo..=hi`, which must contain
    /// every non-zero coefficient.
    pub fn with_lag_window(&self, lo: i32, hi: i32) -> Result<Self> {
        let t = self.trimmed();
        if !t.is_zero() && (t.min_lag < lo || t.max_lag() > hi) {
            return Err(RatexError::LagMismatch(format!(
                "lags {}..{} do not fit in window {}..{}",
                t.min_lag,
                t.max_lag(),
                lo,
                hi
            )));
        }
        let coeffs = (lo..=hi).map(|k| self.coeff(k)).collect();
        Self::new(self.rows, self.cols, lo, coeffs)
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: i32) -> Self {
        Self { min_lag: self.min_lag + k, ..self.clone() }
    }

    /// `[·]_+`: keeps lags `>= 0`.
    pub fn plus_part(&self) -> Self {
        if self.max_lag() < 0 {
            return Self::zeros(self.rows, self.cols);
        }
        let lo = self.min_lag.max(0);
        let coeffs = (lo..=self.max_lag()).map(|k| self.coeff(k)).collect();
        Self { rows: self.rows, cols: self.cols, min_lag: lo, coeffs }.trimmed()
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            min_lag: self.min_lag,
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    /// Right-multiplication of every coefficient by a constant matrix.
    pub fn mul_const_right(&self, m: &DMatrix<f64>) -> Result<Self> {
        if self.cols != m.nrows() {
            return Err(RatexError::ShapeMismatch { op: "mul_const_right", left: self.shape(), right: m.shape() });
        }
        Ok(Self { rows: self.rows, cols: m.ncols(), min_lag: self.min_lag, coeffs: self.coeffs.iter().map(|c| c * m).collect() })
    }

    /// Value at a complex point `z` (must be non-zero when negative lags exist).
    pub fn evaluate(&self, z: Complex64) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.rows, self.cols);
        let mut zk = z.powi(self.min_lag);
        for c in &self.coeffs {
            out += c.map(|v| Complex64::new(v, 0.0)) * zk;
            zk *= z;
        }
        out
    }

    /// Max-abs coefficient difference, comparing lag by lag over both ranges.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.min_lag.min(other.min_lag);
        let hi = self.max_lag().max(other.max_lag());
        (lo..=hi).map(|k| max_abs(&(self.coeff(k) - other.coeff(k)))).fold(0.0, f64::max)
    }
}

/// Coefficient-wise sum over the union of lag ranges, trimmed.
pub fn lp_add(a: &LaurentMatrix, b: &LaurentMatrix) -> Result<LaurentMatrix> {
    combine(a, b, 1.0, "lp_add")
}

pub fn lp_sub(a: &LaurentMatrix, b: &LaurentMatrix) -> Result<LaurentMatrix> {
    combine(a, b, -1.0, "lp_sub")
}

fn combine(a: &LaurentMatrix, b: &LaurentMatrix, sign: f64, op: &'static str) -> Result<LaurentMatrix> {
    if a.shape() != b.shape() {
        return Err(RatexError::ShapeMismatch { op, left: a.shape(), right: b.shape() });
    }
    let lo = a.min_lag.min(b.min_lag);
    let hi = a.max_lag().max(b.max_lag());
    let coeffs = (lo..=hi).map(|k| a.coeff(k) + b.coeff(k) * sign).collect();
    Ok(LaurentMatrix { rows: a.rows, cols: a.cols, min_lag: lo, coeffs }.trimmed())
}

/// Cauchy product of the coefficient sequences, trimmed.
pub fn lp_mul(a: &LaurentMatrix, b: &LaurentMatrix) -> Result<LaurentMatrix> {
    if a.cols != b.rows {
        return Err(RatexError::ShapeMismatch { op: "lp_mul", left: a.shape(), right: b.shape() });
    }
    let len = a.coeffs.len() + b.coeffs.len() - 1;
    let mut coeffs = vec![DMatrix::zeros(a.rows, b.cols); len];
    for (i, ai) in a.coeffs.iter().enumerate() {
        for (j, bj) in b.coeffs.iter().enumerate() {
            coeffs[i + j] += ai * bj;
        }
    }
    Ok(LaurentMatrix { rows: a.rows, cols: b.cols, min_lag: a.min_lag + b.min_lag, coeffs }.trimmed())
}

impl Add for &LaurentMatrix {
    type Output = Result<LaurentMatrix>;
    fn add(self, rhs: Self) -> Self::Output {
        lp_add(self, rhs)
    }
}

impl Sub for &LaurentMatrix {
    type Output = Result<LaurentMatrix>;
    fn sub(self, rhs: Self) -> Self::Output {
        lp_sub(self, rhs)
    }
}

impl Mul for &LaurentMatrix {
    type Output = Result<LaurentMatrix>;
    fn mul(self, rhs: Self) -> Self::Output {
        lp_mul(self, rhs)
    }
}

/// Determinant of `z^{-min_lag} a(z)` as an ordinary polynomial, with its zeros.
#[derive(Debug, Clone)]
pub struct DetPoly {
    /// Ascending coefficients; the leading one is non-zero.
    pub coeffs: Vec<f64>,
    /// Zeros sorted by modulus, exact zeros at the origin included.
    pub zeros: Vec<Complex64>,
}

impl DetPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Determinant polynomial and zeros of a square Laurent matrix.
///
/// The determinant is recovered by evaluating at roots of unity and
/// interpolating, which is exact up to rounding for the known degree bound.
pub fn lp_det_and_zeros(a: &LaurentMatrix) -> Result<DetPoly> {
    if a.rows != a.cols {
        return Err(RatexError::ShapeMismatch { op: "lp_det_and_zeros", left: a.shape(), right: a.shape() });
    }
    let t = a.trimmed();
    if t.is_zero() {
        return Err(RatexError::SingularDeterminant);
    }
    let n = t.rows;
    let p = t.shift(-t.min_lag);
    let bound = n * (p.coeffs.len() - 1);
    let pts = bound + 1;
    let mut values = Vec::with_capacity(pts);
    for k in 0..pts {
        let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / pts as f64);
        values.push(p.evaluate(z).lu().determinant());
    }
    let mut coeffs: Vec<f64> = (0..pts)
        .map(|j| {
            let s: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / pts as f64))
                .sum();
            s.re / pts as f64
        })
        .collect();

    // Entry-scale of the determinant: products of n coefficient magnitudes.
    let big = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let ref_scale = p.scale().powi(n as i32);
    if big <= 1e-12 * ref_scale {
        return Err(RatexError::SingularDeterminant);
    }
    let cut = 1e-12 * big;
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= cut) {
        coeffs.pop();
    }
    let origin = coeffs.iter().take_while(|c| c.abs() <= cut).count();
    for c in coeffs.iter_mut().take(origin) {
        *c = 0.0;
    }
    let mut zeros = vec![Complex64::new(0.0, 0.0); origin];
    zeros.extend(poly_roots(&coeffs[origin..]));
    zeros.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(DetPoly { coeffs, zeros })
}

/// Direction of a matrix power-series expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesDirection {
    /// Taylor series in `z` around the origin; needs `min_lag >= 0`.
    PowersOfZ,
    /// Series in `z^{-1}` around infinity; needs `max_lag <= 0`.
    PowersOfZInv,
}

/// First `horizon + 1` coefficients of the series inverse of `a`.
///
/// For [`SeriesDirection::PowersOfZ`] entry `j` multiplies `z^j`; for
/// [`SeriesDirection::PowersOfZInv`] it multiplies `z^{-j}`.
pub fn lp_truncated_inverse_series(a: &LaurentMatrix, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let t = a.trimmed();
    let dir = if t.min_lag >= 0 {
        SeriesDirection::PowersOfZ
    } else if t.max_lag() <= 0 {
        SeriesDirection::PowersOfZInv
    } else {
        return Err(RatexError::InvalidArgument("series inverse needs a polynomial in z or in z^-1".into()));
    };
    inverse_series(a, horizon, dir)
}

pub fn inverse_series(a: &LaurentMatrix, horizon: usize, dir: SeriesDirection) -> Result<Vec<DMatrix<f64>>> {
    if a.rows != a.cols {
        return Err(RatexError::ShapeMismatch { op: "inverse_series", left: a.shape(), right: a.shape() });
    }
    let n = a.rows;
    // g[i] is the coefficient of the i-th power in the expansion variable.
    let g: Vec<DMatrix<f64>> = match dir {
        SeriesDirection::PowersOfZ => {
            if a.trimmed().min_lag < 0 {
                return Err(RatexError::InvalidArgument("negative lags in a z-series".into()));
            }
            (0..=a.max_lag().max(0)).map(|k| a.coeff(k)).collect()
        }
        SeriesDirection::PowersOfZInv => {
            if a.trimmed().max_lag() > 0 {
                return Err(RatexError::InvalidArgument("positive lags in a z^-1-series".into()));
            }
            (0..=(-a.min_lag).max(0)).map(|k| a.coeff(-k)).collect()
        }
    };
    let lu = g[0].clone().lu();
    let g0_inv = lu.try_inverse().ok_or(RatexError::SingularLeadingCoefficient)?;
    if crate::linalg::rcond(&g[0]) < 1e-14 {
        return Err(RatexError::SingularLeadingCoefficient);
    }
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    for j in 0..=horizon {
        let mut rhs = if j == 0 { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) };
        for i in 1..=j.min(g.len() - 1) {
            rhs -= &g[i] * &out[j - i];
        }
        out.push(&g0_inv * rhs);
    }
    Ok(out)
}

/// A validated parameter point `(B, A)` with declared lag bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    b: LaurentMatrix,
    a: LaurentMatrix,
    lambda: usize,
    kappa: usize,
}

impl Model {
    pub fn new(b: LaurentMatrix, a: LaurentMatrix, lambda: usize, kappa: usize) -> Result<Self> {
        let (n, nb) = b.shape();
        if n != nb {
            return Err(RatexError::InvalidArgument(format!("B must be square, got {n}x{nb}")));
        }
        if a.rows() != n {
            return Err(RatexError::ShapeMismatch { op: "Model::new", left: b.shape(), right: a.shape() });
        }
        let (l, k) = (lambda as i32, kappa as i32);
        let b = b.with_lag_window(-l, k)?;
        let at = a.trimmed();
        if !at.is_zero() && at.min_lag() < 0 {
            return Err(RatexError::LagMismatch("A must be a polynomial in z (no negative lags)".into()));
        }
        let a = a.with_lag_window(0, k)?;
        Ok(Self { b, a, lambda, kappa })
    }

    /// `B` stored over lags `-lambda..=kappa`.
    pub fn b(&self) -> &LaurentMatrix {
        &self.b
    }

    /// `A` stored over lags `0..=kappa`.
    pub fn a(&self) -> &LaurentMatrix {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.b.rows()
    }

    pub fn m(&self) -> usize {
        self.a.cols()
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }
}
