//! Stationary solution objects: `[B_minus^{-1} A]_+`, `A^+`, the transfer
//! series `C(z)`, the canonical-form normalization of `C_0`, the spectral
//! density and a sample-path simulator.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{RatexError, Result};
use crate::linalg::{complex_singular_values, max_abs, numerical_rank, rcond, singular_values};
use crate::polylab::{inverse_series, lp_det_and_zeros, lp_mul, LaurentMatrix, Model, SeriesDirection};
use crate::tol::ToleranceConfig;
use crate::wienerhopf::{wh_factorize, WHFactors};

/// Hard cap on the automatically chosen MA(∞) truncation.
pub const MAX_SIM_HORIZON: usize = 10_000;

/// Taylor coefficients `C_0, ..., C_N` of the transfer function.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSeries {
    pub coeffs: Vec<DMatrix<f64>>,
}

impl TransferSeries {
    pub fn horizon(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `C_j`, zero beyond the horizon.
    pub fn coeff(&self, j: usize) -> DMatrix<f64> {
        self.coeffs.get(j).cloned().unwrap_or_else(|| {
            let c = &self.coeffs[0];
            DMatrix::zeros(c.nrows(), c.ncols())
        })
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    fn rotated(&self, v: &DMatrix<f64>) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * v).collect() }
    }
}

/// Horizon needed by the identification matrices: `(n + 1) κ + λ`.
pub fn required_horizon(n: usize, kappa: usize, lambda: usize) -> usize {
    (n + 1) * kappa + lambda
}

#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub model: Model,
    pub factors: WHFactors,
    /// `[B_minus^{-1} A]_+` over lags `0..=κ`.
    pub ma_part: LaurentMatrix,
    /// `A^+ = B_minus [B_minus^{-1} A]_+` over lags `-λ..=κ`.
    pub a_plus: LaurentMatrix,
    pub transfer: TransferSeries,
    pub c0_canonical: bool,
    pub c0_rank: usize,
}

/// `[B_minus^{-1} A]_+` where `B_minus` is a polynomial in `z^{-1}` with an
/// invertible lag-0 coefficient. `A` may carry negative lags; they do not
/// reach the non-negative part.
pub fn plus_part_of_bminus_inv_a(b_minus: &LaurentMatrix, a: &LaurentMatrix) -> Result<LaurentMatrix> {
    if b_minus.cols() != a.rows() {
        return Err(RatexError::ShapeMismatch { op: "plus_part_of_bminus_inv_a", left: b_minus.shape(), right: a.shape() });
    }
    let at = a.trimmed();
    let hi = at.max_lag();
    if at.is_zero() || hi < 0 {
        return Ok(LaurentMatrix::zeros(a.rows(), a.cols()));
    }
    let finv = inverse_series(b_minus, hi as usize, SeriesDirection::PowersOfZInv)?;
    let coeffs = (0..=hi)
        .map(|k| {
            let mut acc = DMatrix::zeros(a.rows(), a.cols());
            for (i, fi) in finv.iter().enumerate().take((hi - k) as usize + 1) {
                acc += fi * at.coeff(k + i as i32);
            }
            acc
        })
        .collect();
    Ok(LaurentMatrix::new(a.rows(), a.cols(), 0, coeffs)?.trimmed())
}

/// `A^+ = B_minus · ma_part`.
pub fn a_plus(b_minus: &LaurentMatrix, ma_part: &LaurentMatrix) -> Result<LaurentMatrix> {
    lp_mul(b_minus, ma_part)
}

/// Long division `B_plus^{-1} ma_part` up to `z^horizon`.
pub fn transfer_series(b_plus: &LaurentMatrix, ma_part: &LaurentMatrix, horizon: usize) -> Result<TransferSeries> {
    let mut gen = TransferGenerator::new(b_plus, ma_part)?;
    let coeffs = (0..=horizon).map(|_| gen.next_coeff()).collect();
    Ok(TransferSeries { coeffs })
}

/// Incremental evaluation of `G_0 C_j = M_j - Σ_{i=1}^{min(κ,j)} G_i C_{j-i}`.
struct TransferGenerator {
    g: Vec<DMatrix<f64>>,
    g0_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    m: Vec<DMatrix<f64>>,
    out: Vec<DMatrix<f64>>,
}

impl TransferGenerator {
    fn new(b_plus: &LaurentMatrix, ma_part: &LaurentMatrix) -> Result<Self> {
        if b_plus.cols() != ma_part.rows() || b_plus.rows() != b_plus.cols() {
            return Err(RatexError::ShapeMismatch { op: "transfer_series", left: b_plus.shape(), right: ma_part.shape() });
        }
        let bt = b_plus.trimmed();
        let mt = ma_part.trimmed();
        if (!bt.is_zero() && bt.min_lag() < 0) || (!mt.is_zero() && mt.min_lag() < 0) {
            return Err(RatexError::LagMismatch("transfer_series needs polynomials in z".into()));
        }
        let g: Vec<DMatrix<f64>> = (0..=bt.max_lag().max(0)).map(|k| bt.coeff(k)).collect();
        if rcond(&g[0]) < 1e-14 {
            return Err(RatexError::SingularLeadingCoefficient);
        }
        let m = (0..=mt.max_lag().max(0)).map(|k| mt.coeff(k)).collect();
        Ok(Self { g0_lu: g[0].clone().lu(), g, m, out: Vec::new() })
    }

    fn next_coeff(&mut self) -> DMatrix<f64> {
        let j = self.out.len();
        let mut rhs = self.m.get(j).cloned().unwrap_or_else(|| DMatrix::zeros(self.m[0].nrows(), self.m[0].ncols()));
        for i in 1..=j.min(self.g.len() - 1) {
            rhs -= &self.g[i] * &self.out[j - i];
        }
        let c = self.g0_lu.solve(&rhs).expect("G_0 checked invertible");
        self.out.push(c.clone());
        c
    }
}

/// Factorizes `B`, forms the solution objects and the transfer series up to
/// `horizon`.
pub fn solve(model: &Model, horizon: usize, tol: &ToleranceConfig) -> Result<SolutionBundle> {
    let factors = wh_factorize(model.b(), tol)?;
    let (l, k) = (model.lambda() as i32, model.kappa() as i32);
    let ma_part = plus_part_of_bminus_inv_a(&factors.b_minus, model.a())?.with_lag_window(0, k)?;
    let ap = a_plus(&factors.b_minus, &ma_part)?.with_lag_window(-l, k)?;
    let transfer = transfer_series(&factors.b_plus, &ma_part, horizon)?;
    let c0 = &transfer.coeffs[0];
    let c0_rank = numerical_rank(&singular_values(c0), c0.nrows(), c0.ncols(), tol.rank);
    let c0_canonical = c0_rank == model.m() && is_canonical(c0);
    Ok(SolutionBundle { model: model.clone(), factors, ma_part, a_plus: ap, transfer, c0_canonical, c0_rank })
}

fn zero_cut(c: &DMatrix<f64>) -> f64 {
    1e-10 * max_abs(c).max(1.0)
}

/// Canonical quasi-lower-triangular predicate: the first non-zero entry of
/// column `j` is positive and sits in row `i_j` with `i_1 < ... < i_m`.
pub fn is_canonical(c0: &DMatrix<f64>) -> bool {
    let cut = zero_cut(c0);
    let mut last: Option<usize> = None;
    for j in 0..c0.ncols() {
        let Some(i) = (0..c0.nrows()).find(|&i| c0[(i, j)].abs() > cut) else {
            return false;
        };
        if c0[(i, j)] <= 0.0 || last.is_some_and(|p| i <= p) {
            return false;
        }
        last = Some(i);
    }
    true
}

/// Orthogonal `V` such that `C_0 V` is canonical quasi-lower triangular,
/// built row by row from Householder reflectors acting on the columns.
pub fn canonical_rotation(c0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = c0.ncols();
    if is_canonical(c0) {
        return Ok(DMatrix::identity(m, m));
    }
    let cut = zero_cut(c0);
    let mut v = DMatrix::<f64>::identity(m, m);
    let mut work = c0.clone();
    let mut j = 0;
    for i in 0..c0.nrows() {
        if j == m {
            break;
        }
        let x: Vec<f64> = (j..m).map(|c| work[(i, c)]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= cut {
            continue;
        }
        // Reflector on columns j..m sending x to (norm, 0, ..., 0).
        let mut u = x.clone();
        u[0] -= norm;
        let uu: f64 = u.iter().map(|v| v * v).sum();
        if uu > 0.0 {
            let apply = |mat: &mut DMatrix<f64>| {
                for r in 0..mat.nrows() {
                    let dot: f64 = (0..u.len()).map(|t| mat[(r, j + t)] * u[t]).sum();
                    let f = 2.0 * dot / uu;
                    for t in 0..u.len() {
                        mat[(r, j + t)] -= f * u[t];
                    }
                }
            };
            apply(&mut work);
            apply(&mut v);
        }
        for c in j + 1..m {
            work[(i, c)] = 0.0;
        }
        j += 1;
    }
    if j < m {
        return Err(RatexError::RankDeficientC0 { rank: j, required: m });
    }
    Ok(v)
}

#[derive(Debug, Clone, Default)]
pub struct CfReport {
    pub canonical_input: bool,
    pub c0_rank: usize,
    /// Zeros of the invertibility test within the boundary band of `|z| = 1`.
    pub boundary_zeros: Vec<Complex64>,
    /// True when the exact minor test was unavailable and only the disk grid
    /// screen supports the invertibility verdict.
    pub grid_only: bool,
    pub warnings: Vec<String>,
}

/// Checks the canonical-form conditions and rotates the bundle into them.
pub fn cf_check_and_normalize(
    bundle: &SolutionBundle,
    tol: &ToleranceConfig,
) -> Result<(DMatrix<f64>, SolutionBundle, CfReport)> {
    let c0 = &bundle.transfer.coeffs[0];
    let (n, m) = c0.shape();
    let rank = numerical_rank(&singular_values(c0), n, m, tol.rank);
    if rank < m {
        return Err(RatexError::RankDeficientC0 { rank, required: m });
    }
    let mut report = CfReport { canonical_input: is_canonical(c0), c0_rank: rank, ..Default::default() };
    check_invertibility(&bundle.ma_part, tol, &mut report)?;
    let v = canonical_rotation(c0)?;
    if report.canonical_input {
        let mut b = bundle.clone();
        b.c0_canonical = true;
        return Ok((v, b, report));
    }
    let rotated = rotate_bundle(bundle, &v)?;
    Ok((v, rotated, report))
}

/// Applies `A ↦ A V` to every object derived from `A`.
pub fn rotate_bundle(bundle: &SolutionBundle, v: &DMatrix<f64>) -> Result<SolutionBundle> {
    let model =
        Model::new(bundle.model.b().clone(), bundle.model.a().mul_const_right(v)?, bundle.model.lambda(), bundle.model.kappa())?;
    let transfer = bundle.transfer.rotated(v);
    let c0 = &transfer.coeffs[0];
    Ok(SolutionBundle {
        model,
        factors: bundle.factors.clone(),
        ma_part: bundle.ma_part.mul_const_right(v)?,
        a_plus: bundle.a_plus.mul_const_right(v)?,
        c0_canonical: is_canonical(c0),
        c0_rank: bundle.c0_rank,
        transfer,
    })
}

fn rank_deficient_at(ma: &LaurentMatrix, z: Complex64) -> bool {
    let val = ma.evaluate(z);
    let m = val.ncols();
    let sv = complex_singular_values(&val);
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.len() < m || sv[m - 1] <= 1e-8 * smax.max(1e-300)
}

/// `rank [B_minus^{-1} A]_+(z) = m` on the open unit disk.
///
/// The rank can only drop where every maximal minor vanishes, so the zeros
/// of the first non-trivial minor are candidate points, each checked by SVD.
/// A polar grid screen supplements the test.
fn check_invertibility(ma: &LaurentMatrix, tol: &ToleranceConfig, report: &mut CfReport) -> Result<()> {
    let (n, m) = ma.shape();
    let mut candidates: Option<Vec<Complex64>> = None;
    for rows in combinations(n, m).take(256) {
        let coeffs: Vec<DMatrix<f64>> = ma.coeffs().iter().map(|c| c.select_rows(&rows)).collect();
        let minor = LaurentMatrix::new(m, m, ma.min_lag(), coeffs)?;
        match lp_det_and_zeros(&minor) {
            Ok(det) => {
                candidates = Some(det.zeros);
                break;
            }
            Err(RatexError::SingularDeterminant) => continue,
            Err(e) => return Err(e),
        }
    }
    match &candidates {
        Some(zeros) => {
            for &z in zeros {
                let r = z.norm();
                if (r - 1.0).abs() <= tol.boundary {
                    if n == m || rank_deficient_at(ma, z) {
                        report.boundary_zeros.push(z);
                    }
                } else if r < 1.0 && (n == m || rank_deficient_at(ma, z)) {
                    return Err(RatexError::NotInvertible { zero: z });
                }
            }
        }
        None => report.grid_only = true,
    }
    if !report.boundary_zeros.is_empty() {
        report.warnings.push(format!("{} zero(s) of the transfer function lie on the unit circle", report.boundary_zeros.len()));
    }
    if n > m {
        for ri in 1..=9 {
            let r = ri as f64 / 10.0;
            for k in 0..64 {
                let z = Complex64::from_polar(r, 2.0 * PI * k as f64 / 64.0);
                if rank_deficient_at(ma, z) {
                    return Err(RatexError::NotInvertible { zero: z });
                }
            }
        }
        if report.grid_only {
            report.warnings.push("invertibility verified on a disk grid only".into());
        }
    }
    Ok(())
}

/// Index sets of size `k` from `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().unwrap();
        let mut i = k;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for t in i + 1..k {
                    c[t] = c[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

/// `K` equispaced frequencies `2πk/K` on `[0, 2π)`.
pub fn unit_grid(k: usize) -> Vec<f64> {
    (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).collect()
}

/// `f(e^{iω}) = B^{-1} A^+ (B^{-1} A^+)^*` at each frequency.
pub fn spectral_density(b: &LaurentMatrix, a_plus: &LaurentMatrix, omegas: &[f64]) -> Result<Vec<DMatrix<Complex64>>> {
    if b.rows() != b.cols() || b.rows() != a_plus.rows() {
        return Err(RatexError::ShapeMismatch { op: "spectral_density", left: b.shape(), right: a_plus.shape() });
    }
    let scale = b.scale().max(1e-300);
    omegas
        .iter()
        .map(|&w| {
            let z = Complex64::from_polar(1.0, w);
            let bz = b.evaluate(z);
            let sv = complex_singular_values(&bz);
            if sv.last().copied().unwrap_or(0.0) <= 1e-13 * scale {
                return Err(RatexError::SingularOnGrid { omega: w });
            }
            let g = bz.lu().solve(&a_plus.evaluate(z)).ok_or(RatexError::SingularOnGrid { omega: w })?;
            Ok(&g * g.adjoint())
        })
        .collect()
}

/// Spectral density of a solved model on the `K`-point grid.
pub fn bundle_spectrum(bundle: &SolutionBundle, k: usize) -> Result<Vec<DMatrix<Complex64>>> {
    spectral_density(bundle.model.b(), &bundle.a_plus, &unit_grid(k))
}

/// `Γ(h) = E[y_t y_{t-h}']` for `h = 0..=max_lag`, by inverse transform of
/// the spectral density sampled on a `K`-point grid.
pub fn autocovariances_from_spectrum(f: &[DMatrix<Complex64>], max_lag: usize) -> Vec<DMatrix<f64>> {
    let k = f.len() as f64;
    (0..=max_lag)
        .map(|h| {
            let n = f[0].nrows();
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for (j, fj) in f.iter().enumerate() {
                let w = 2.0 * PI * j as f64 / k;
                acc += fj * Complex64::from_polar(1.0, -w * h as f64);
            }
            acc.map(|c| c.re / k)
        })
        .collect()
}

/// Sample autocovariances `Γ̂(h) = T^{-1} Σ_t y_t y_{t-h}'` of a `T × n` path.
pub fn sample_autocovariances(y: &DMatrix<f64>, max_lag: usize) -> Vec<DMatrix<f64>> {
    let (t, n) = y.shape();
    let mean = y.row_mean();
    let yc = DMatrix::from_fn(t, n, |r, c| y[(r, c)] - mean[c]);
    (0..=max_lag)
        .map(|h| {
            let mut g = DMatrix::zeros(n, n);
            for s in h..t {
                g += yc.row(s).transpose() * yc.row(s - h);
            }
            g / t as f64
        })
        .collect()
}

/// Smallest `h` with `‖C_h‖_max < 1e-12 ‖C_0‖_max`, capped.
pub fn default_sim_horizon(bundle: &SolutionBundle) -> Result<usize> {
    let mut gen = TransferGenerator::new(&bundle.factors.b_plus, &bundle.ma_part)?;
    let c0 = max_abs(&gen.next_coeff());
    if c0 == 0.0 {
        return Ok(0);
    }
    for h in 1..=MAX_SIM_HORIZON {
        if max_abs(&gen.next_coeff()) < 1e-12 * c0 {
            return Ok(h);
        }
    }
    Ok(MAX_SIM_HORIZON)
}

/// `T × n` sample path of `y_t = Σ_{j=0}^{h} C_j ε_{t-j}` with standard
/// normal shocks drawn from a seeded ChaCha stream.
pub fn simulate(bundle: &SolutionBundle, t: usize, seed: u64, horizon: Option<usize>) -> Result<DMatrix<f64>> {
    let h = match horizon {
        Some(h) => h,
        None => default_sim_horizon(bundle)?,
    };
    let c = transfer_series(&bundle.factors.b_plus, &bundle.ma_part, h)?;
    let (n, m) = (c.rows(), c.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = t + h;
    let eps = DMatrix::<f64>::from_fn(m, total, |_, _| StandardNormal.sample(&mut rng));
    let mut y = DMatrix::<f64>::zeros(t, n);
    for s in 0..t {
        let mut row = nalgebra::DVector::<f64>::zeros(n);
        for (j, cj) in c.coeffs.iter().enumerate() {
            row += cj * eps.column(s + h - j);
        }
        y.set_row(s, &row.transpose());
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(min: i32, c: &[f64]) -> LaurentMatrix {
        LaurentMatrix::scalar(min, c).unwrap()
    }

    fn scalar_model(b: LaurentMatrix, a: LaurentMatrix, l: usize, k: usize) -> Model {
        Model::new(b, a, l, k).unwrap()
    }

    #[test]
    fn example_plus_part_and_a_plus() {
        let (a0, a1, bm) = (0.7, -1.3, -0.4);
        let bminus = sc(-1, &[-bm, 1.0]);
        let ma = plus_part_of_bminus_inv_a(&bminus, &sc(0, &[a0, a1])).unwrap();
        assert!((ma.coeff(0)[(0, 0)] - (a1 * bm + a0)).abs() < 1e-14);
        assert!((ma.coeff(1)[(0, 0)] - a1).abs() < 1e-14);
        let ap = a_plus(&bminus, &ma).unwrap();
        assert!((ap.coeff(-1)[(0, 0)] - (-a1 * bm * bm - a0 * bm)).abs() < 1e-14);
        assert!((ap.coeff(0)[(0, 0)] - a0).abs() < 1e-14);
        assert!((ap.coeff(1)[(0, 0)] - a1).abs() < 1e-14);
    }

    #[test]
    fn identity_bminus_leaves_a() {
        let a = LaurentMatrix::new(2, 1, 0, vec![DMatrix::from_column_slice(2, 1, &[1.0, 2.0])]).unwrap();
        let ma = plus_part_of_bminus_inv_a(&LaurentMatrix::identity(2), &a).unwrap();
        assert_eq!(ma, a.trimmed());
    }

    #[test]
    fn white_noise_transfer() {
        let c = transfer_series(&sc(0, &[1.0]), &sc(0, &[1.0]), 3).unwrap();
        assert_eq!(c.coeffs.iter().map(|m| m[(0, 0)]).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn geometric_transfer() {
        // (a0 + a1 z) / (b0 (1 - bp z))
        let (a0, a1, b0, bp) = (0.5, 0.25, 2.0, 0.6);
        let c = transfer_series(&sc(0, &[b0, -b0 * bp]), &sc(0, &[a0, a1]), 6).unwrap();
        let mut prev = a0 / b0;
        assert!((c.coeffs[0][(0, 0)] - prev).abs() < 1e-14);
        for j in 1..=6 {
            let want = bp * prev + if j == 1 { a1 / b0 } else { 0.0 };
            assert!((c.coeffs[j][(0, 0)] - want).abs() < 1e-14);
            prev = want;
        }
    }

    #[test]
    fn singular_g0_is_rejected() {
        let err = transfer_series(&sc(0, &[0.0, 1.0]), &sc(0, &[1.0]), 2).unwrap_err();
        assert!(matches!(err, RatexError::SingularLeadingCoefficient));
    }

    #[test]
    fn canonical_rotation_cases() {
        let lower = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 1.0, 3.0, -1.0, 0.5]);
        assert_eq!(canonical_rotation(&lower).unwrap(), DMatrix::identity(2, 2));
        let neg = DMatrix::from_element(1, 1, -1.0);
        assert_eq!(canonical_rotation(&neg).unwrap()[(0, 0)], -1.0);
        let full = DMatrix::from_row_slice(3, 2, &[0.3, -0.8, 1.1, 0.2, -0.5, 0.9]);
        let v = canonical_rotation(&full).unwrap();
        assert!((v.transpose() * &v - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        assert!(is_canonical(&(&full * &v)));
        let defic = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(canonical_rotation(&defic), Err(RatexError::RankDeficientC0 { rank: 1, required: 2 })));
    }

    #[test]
    fn cf_rejects_noninvertible() {
        // ma_part = 1 + 2z has a zero at -1/2 inside the disk.
        let m = scalar_model(sc(0, &[1.0]), sc(0, &[1.0, 2.0]), 0, 1);
        let b = solve(&m, 3, &ToleranceConfig::default()).unwrap();
        let err = cf_check_and_normalize(&b, &ToleranceConfig::default()).unwrap_err();
        assert!(matches!(err, RatexError::NotInvertible { .. }));
    }

    #[test]
    fn cf_boundary_is_warning() {
        let m = scalar_model(sc(0, &[1.0]), sc(0, &[1.0, 1.0]), 0, 1);
        let b = solve(&m, 3, &ToleranceConfig::default()).unwrap();
        let (_, _, rep) = cf_check_and_normalize(&b, &ToleranceConfig::default()).unwrap();
        assert_eq!(rep.boundary_zeros.len(), 1);
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn cf_rotation_flips_sign() {
        let m = scalar_model(sc(0, &[1.0]), sc(0, &[-2.0]), 0, 0);
        let b = solve(&m, 2, &ToleranceConfig::default()).unwrap();
        assert!(!b.c0_canonical);
        let (v, nb, rep) = cf_check_and_normalize(&b, &ToleranceConfig::default()).unwrap();
        assert_eq!(v[(0, 0)], -1.0);
        assert!(nb.c0_canonical && !rep.canonical_input);
        assert_eq!(nb.model.a().coeff(0)[(0, 0)], 2.0);
    }

    #[test]
    fn tall_invertibility_uses_minors() {
        // Rows (1 + 2z, 1 + 2z): every minor vanishes at -1/2.
        let ma = LaurentMatrix::new(
            2,
            1,
            0,
            vec![DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), DMatrix::from_column_slice(2, 1, &[2.0, 2.0])],
        )
        .unwrap();
        let mut rep = CfReport::default();
        assert!(check_invertibility(&ma, &ToleranceConfig::default(), &mut rep).is_err());
        // Rows (1 + 2z, 1): the first minor vanishes inside the disk but the second does not.
        let ma = LaurentMatrix::new(
            2,
            1,
            0,
            vec![DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), DMatrix::from_column_slice(2, 1, &[2.0, 0.0])],
        )
        .unwrap();
        let mut rep = CfReport::default();
        check_invertibility(&ma, &ToleranceConfig::default(), &mut rep).unwrap();
    }

    #[test]
    fn combinations_enumerate() {
        let all: Vec<_> = combinations(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
    }

    #[test]
    fn white_noise_spectrum() {
        let f = spectral_density(&sc(0, &[1.0]), &sc(0, &[1.0]), &unit_grid(8)).unwrap();
        assert!(f.iter().all(|m| (m[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn spectrum_singular_on_grid() {
        let err = spectral_density(&sc(0, &[1.0, -1.0]), &sc(0, &[1.0]), &unit_grid(4)).unwrap_err();
        assert!(matches!(err, RatexError::SingularOnGrid { .. }));
    }

    #[test]
    fn ma1_autocovariances() {
        // y = (1 + 0.5 L) e: Γ(0) = 1.25, Γ(1) = 0.5, Γ(2) = 0.
        let f = spectral_density(&sc(0, &[1.0]), &sc(0, &[1.0, 0.5]), &unit_grid(32)).unwrap();
        let g = autocovariances_from_spectrum(&f, 2);
        assert!((g[0][(0, 0)] - 1.25).abs() < 1e-12);
        assert!((g[1][(0, 0)] - 0.5).abs() < 1e-12);
        assert!(g[2][(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = scalar_model(sc(0, &[1.0, -0.5]), sc(0, &[1.0]), 0, 1);
        let b = solve(&m, 4, &ToleranceConfig::default()).unwrap();
        let h = default_sim_horizon(&b).unwrap();
        assert!(h > 30 && h < 60, "{h}");
        let y1 = simulate(&b, 200, 7, None).unwrap();
        let y2 = simulate(&b, 200, 7, None).unwrap();
        assert_eq!(y1, y2);
        assert_ne!(y1, simulate(&b, 200, 8, None).unwrap());
    }
}
