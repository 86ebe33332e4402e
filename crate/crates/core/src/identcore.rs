//! Identification matrices `T`, `H`, `P` built from the impulse responses,
//! the observational-equivalence kernel test, and the rank tests for affine
//! restrictions (system-wide and equation-wise), plus the VARMA cross-check
//! populated by structural coefficients.
//!
//! Coefficient vectors follow one normative ordering: column-stacking of the
//! `n × (n(κ+λ+1) + m(κ+1))` matrix `[B_{-λ} … B_κ | A_0 … A_κ]`. For kernel
//! tests the `A` block is replaced by `A^+` over lags `-λ..=κ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{RatexError, Result};
use crate::linalg::{kron_identity, max_abs, numerical_rank, numerical_rank_with_scale, singular_values};
use crate::polylab::{LaurentMatrix, Model};
use crate::resolve::{required_horizon, solve, transfer_series, SolutionBundle, TransferSeries};
use crate::tol::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub kappa: usize,
    pub lambda: usize,
}

impl Dims {
    pub fn of(model: &Model) -> Self {
        Self { n: model.n(), m: model.m(), kappa: model.kappa(), lambda: model.lambda() }
    }

    /// `κ + λ + 1`.
    pub fn k(&self) -> usize {
        self.kappa + self.lambda + 1
    }

    /// Length of the system coefficient vector `n²(κ+λ+1) + nm(κ+1)`.
    pub fn system_len(&self) -> usize {
        self.n * self.n * self.k() + self.n * self.m * (self.kappa + 1)
    }

    /// Length of one equation's coefficient vector `n(κ+λ+1) + m(κ+1)`.
    pub fn equation_len(&self) -> usize {
        self.n * self.k() + self.m * (self.kappa + 1)
    }

    /// Column of `[B_{-λ} … B_κ | A_0 … A_κ]` holding entry `(·, col)` of the
    /// given block and lag.
    fn column(&self, block: Block, lag: i32, col: usize) -> Result<usize> {
        let (l, k) = (self.lambda as i32, self.kappa as i32);
        match block {
            Block::B if (-l..=k).contains(&lag) && col < self.n => Ok((lag + l) as usize * self.n + col),
            Block::A if (0..=k).contains(&lag) && col < self.m => Ok(self.n * self.k() + lag as usize * self.m + col),
            _ => Err(RatexError::Restriction(format!("coefficient {block:?}[{lag}][.][{col}] is outside the model"))),
        }
    }

    /// Position of `block_lag[row, col]` (0-based) in the system vector.
    pub fn system_index(&self, block: Block, lag: i32, row: usize, col: usize) -> Result<usize> {
        if row >= self.n {
            return Err(RatexError::Restriction(format!("row {row} is outside the model")));
        }
        Ok(self.column(block, lag, col)? * self.n + row)
    }

    /// Position of `block_lag[·, col]` in an equation vector.
    pub fn equation_index(&self, block: Block, lag: i32, col: usize) -> Result<usize> {
        self.column(block, lag, col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    B,
    A,
}

/// `vec([B_{-λ} … B_κ | A_0 … A_κ])`.
pub fn system_vec(model: &Model) -> DVector<f64> {
    let x = coefficient_matrix(model);
    DVector::from_column_slice(x.as_slice())
}

/// Row `i` (0-based) of `[B_{-λ} … B_κ | A_0 … A_κ]`.
pub fn equation_vec(model: &Model, i: usize) -> DVector<f64> {
    coefficient_matrix(model).row(i).transpose()
}

/// Inverse of [`system_vec`].
pub fn model_from_system_vec(d: &Dims, x: &DVector<f64>) -> Result<Model> {
    if x.len() != d.system_len() {
        return Err(RatexError::LagMismatch(format!("vector length {} differs from {}", x.len(), d.system_len())));
    }
    let mat = DMatrix::from_column_slice(d.n, x.len() / d.n, x.as_slice());
    let b = (0..d.k()).map(|j| mat.columns(j * d.n, d.n).into_owned()).collect();
    let a = (0..=d.kappa).map(|j| mat.columns(d.n * d.k() + j * d.m, d.m).into_owned()).collect();
    Model::new(LaurentMatrix::new(d.n, d.n, -(d.lambda as i32), b)?, LaurentMatrix::new(d.n, d.m, 0, a)?, d.lambda, d.kappa)
}

fn coefficient_matrix(model: &Model) -> DMatrix<f64> {
    let d = Dims::of(model);
    let mut x = DMatrix::zeros(d.n, d.n * d.k() + d.m * (d.kappa + 1));
    for (j, lag) in (-(d.lambda as i32)..=d.kappa as i32).enumerate() {
        x.columns_mut(j * d.n, d.n).copy_from(&model.b().coeff(lag));
    }
    for lag in 0..=d.kappa {
        x.columns_mut(d.n * d.k() + lag * d.m, d.m).copy_from(&model.a().coeff(lag as i32));
    }
    x
}

/// Affine restrictions `R vec(...) = u` on the whole system.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRestriction {
    pub r: DMatrix<f64>,
    pub u: DVector<f64>,
}

/// Affine restrictions `R_i x_i = u_i` on equation `i` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct EquationRestriction {
    pub equation: usize,
    pub r: DMatrix<f64>,
    pub u: DVector<f64>,
}

impl AffineRestriction {
    pub fn new(r: DMatrix<f64>, u: DVector<f64>) -> Result<Self> {
        if r.nrows() != u.len() {
            return Err(RatexError::Restriction(format!("R has {} rows but u has {} entries", r.nrows(), u.len())));
        }
        Ok(Self { r, u })
    }

    /// Restrictions fixing single coefficients: `(index, value)` pairs.
    pub fn pins(len: usize, pins: &[(usize, f64)]) -> Result<Self> {
        let mut r = DMatrix::zeros(pins.len(), len);
        let mut u = DVector::zeros(pins.len());
        for (row, &(idx, val)) in pins.iter().enumerate() {
            if idx >= len {
                return Err(RatexError::Restriction(format!("pin index {idx} out of range {len}")));
            }
            r[(row, idx)] = 1.0;
            u[row] = val;
        }
        Ok(Self { r, u })
    }
}

impl EquationRestriction {
    pub fn new(equation: usize, r: DMatrix<f64>, u: DVector<f64>) -> Result<Self> {
        if r.nrows() != u.len() {
            return Err(RatexError::Restriction(format!("R has {} rows but u has {} entries", r.nrows(), u.len())));
        }
        Ok(Self { equation, r, u })
    }

    /// Lifts the restriction to the system vector.
    pub fn to_system(&self, d: &Dims) -> AffineRestriction {
        let mut r = DMatrix::zeros(self.r.nrows(), d.system_len());
        for c in 0..self.r.ncols() {
            r.set_column(c * d.n + self.equation, &self.r.column(c));
        }
        AffineRestriction { r, u: self.u.clone() }
    }
}

/// Stacks equation-wise restrictions into one system restriction.
pub fn stack_equations(eqs: &[EquationRestriction], d: &Dims) -> AffineRestriction {
    let lifted: Vec<AffineRestriction> = eqs.iter().map(|e| e.to_system(d)).collect();
    let rows: usize = lifted.iter().map(|l| l.r.nrows()).sum();
    let mut r = DMatrix::zeros(rows, d.system_len());
    let mut u = DVector::zeros(rows);
    let mut at = 0;
    for l in &lifted {
        r.rows_mut(at, l.r.nrows()).copy_from(&l.r);
        u.rows_mut(at, l.r.nrows()).copy_from(&l.u);
        at += l.r.nrows();
    }
    AffineRestriction { r, u }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankVerdict {
    Identified,
    NotIdentified,
}

#[derive(Debug, Clone)]
pub struct RankReport {
    pub matrix_shape: (usize, usize),
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    pub required_rank: usize,
    pub verdict: RankVerdict,
    /// Singular value at position `required_rank` divided by the rank
    /// threshold; values near or below 1 flag fragile verdicts.
    pub gap_ratio: f64,
    pub threshold: f64,
    pub warnings: Vec<String>,
}

impl RankReport {
    pub fn identified(&self) -> bool {
        self.verdict == RankVerdict::Identified
    }

    /// Rank-deficient but within a factor 10 of the threshold.
    pub fn borderline(&self) -> bool {
        !self.identified() && self.gap_ratio >= 0.1
    }
}

/// Rank report for a matrix that must have column rank `required`.
pub fn rank_report(mat: &DMatrix<f64>, required: usize, tol: &ToleranceConfig) -> RankReport {
    let (rows, cols) = mat.shape();
    let sv = singular_values(mat);
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol.rank * smax * rows.max(cols) as f64;
    let rank = numerical_rank(&sv, rows, cols, tol.rank);
    let sreq = if required == 0 { f64::INFINITY } else { sv.get(required - 1).copied().unwrap_or(0.0) };
    let gap_ratio = if threshold > 0.0 {
        sreq / threshold
    } else if sreq > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    RankReport {
        matrix_shape: (rows, cols),
        singular_values: sv,
        numerical_rank: rank,
        required_rank: required,
        verdict: if rank == required { RankVerdict::Identified } else { RankVerdict::NotIdentified },
        gap_ratio,
        threshold,
        warnings: Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct IdentSystem {
    pub dims: Dims,
    pub t: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub hankel_singular_values: Vec<f64>,
    pub hankel_rank: usize,
    pub mcmillan_delta: usize,
    /// System coefficient vector of the model the matrices came from, used to
    /// check that restrictions hold at the point.
    pub point: Option<DVector<f64>>,
}

/// Builds `T`, `H` and `P = [[-T, -H], [I, 0]]` from `C_0 … C_{(n+1)κ+λ}`.
pub fn build_ident_system(transfer: &TransferSeries, dims: Dims, tol: &ToleranceConfig) -> Result<IdentSystem> {
    let Dims { n, m, kappa, lambda } = dims;
    let need = required_horizon(n, kappa, lambda);
    if transfer.horizon() < need {
        return Err(RatexError::InsufficientHorizon { have: transfer.horizon(), need });
    }
    if transfer.rows() != n || transfer.cols() != m {
        return Err(RatexError::ShapeMismatch {
            op: "build_ident_system",
            left: (n, m),
            right: (transfer.rows(), transfer.cols()),
        });
    }
    let k = dims.k();
    let mut t = DMatrix::zeros(n * k, m * k);
    for r in 0..k {
        for c in r..k {
            t.view_mut((r * n, c * m), (n, m)).copy_from(&transfer.coeffs[c - r]);
        }
    }
    let hc = n * kappa;
    let mut h = DMatrix::zeros(n * k, m * hc);
    for r in 0..k {
        for c in 0..hc {
            h.view_mut((r * n, c * m), (n, m)).copy_from(&transfer.coeffs[k - r + c]);
        }
    }
    let mut p = DMatrix::zeros((n + m) * k, m * (k + hc));
    p.view_mut((0, 0), (n * k, m * k)).copy_from(&(-&t));
    p.view_mut((0, m * k), (n * k, m * hc)).copy_from(&(-&h));
    p.view_mut((n * k, 0), (m * k, m * k)).fill_with_identity();

    let hsv = singular_values(&h);
    let pscale = singular_values(&p).first().copied().unwrap_or(0.0);
    let hankel_rank = numerical_rank_with_scale(&hsv, pscale, h.nrows(), h.ncols(), tol.rank);
    Ok(IdentSystem { dims, t, h, p, hankel_singular_values: hsv, hankel_rank, mcmillan_delta: hankel_rank, point: None })
}

impl IdentSystem {
    /// Builds the system for a solved model, extending the transfer series
    /// when the bundle's horizon is too short.
    pub fn from_bundle(bundle: &SolutionBundle, tol: &ToleranceConfig) -> Result<Self> {
        let dims = Dims::of(&bundle.model);
        let need = required_horizon(dims.n, dims.kappa, dims.lambda);
        let mut sys = if bundle.transfer.horizon() >= need {
            build_ident_system(&bundle.transfer, dims, tol)?
        } else {
            let c = transfer_series(&bundle.factors.b_plus, &bundle.ma_part, need)?;
            build_ident_system(&c, dims, tol)?
        };
        sys.point = Some(system_vec(&bundle.model));
        Ok(sys)
    }

    /// `P' ⊗ I_n`.
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        kron_identity(&self.p.transpose(), self.dims.n)
    }

    /// `rank(P)` computed directly.
    pub fn p_rank(&self, tol: &ToleranceConfig) -> usize {
        let sv = singular_values(&self.p);
        numerical_rank(&sv, self.p.nrows(), self.p.ncols(), tol.rank)
    }
}

/// `n²(κ+λ+1) − n·rank(H)`.
pub fn equivalence_class_dim(sys: &IdentSystem) -> usize {
    let d = sys.dims;
    d.n * d.n * d.k() - d.n * sys.hankel_rank
}

/// `n · nullity(P')`, the same dimension obtained from `P` directly.
pub fn equivalence_class_dim_via_nullity(sys: &IdentSystem, tol: &ToleranceConfig) -> usize {
    let d = sys.dims;
    d.n * ((d.n + d.m) * d.k() - sys.p_rank(tol))
}

/// Lower bound `n²(1+λ)` on the equivalence-class dimension.
pub fn equivalence_class_lower_bound(d: &Dims) -> usize {
    d.n * d.n * (1 + d.lambda)
}

#[derive(Debug, Clone)]
pub struct EquivalenceResult {
    pub equivalent: bool,
    pub residual: f64,
    pub limit: f64,
    /// `vec([B̃_{-λ} … B̃_κ | Ã^+_{-λ} … Ã^+_κ])`.
    pub kernel_vec: DVector<f64>,
}

/// Kernel test `(P'⊗I_n) vec([B̃ | Ã^+]) = 0` for a second model against the
/// system of the first.
pub fn obs_equivalent(sys: &IdentSystem, other: &Model, tol: &ToleranceConfig) -> Result<EquivalenceResult> {
    let d = sys.dims;
    let od = Dims::of(other);
    if d != od {
        return Err(RatexError::LagMismatch(format!("models differ in (n, m, kappa, lambda): {d:?} vs {od:?}")));
    }
    let bundle = solve(other, 0, tol)?;
    let (n, k) = (d.n, d.k());
    let mut x = DMatrix::zeros(n, (n + d.m) * k);
    for (j, lag) in (-(d.lambda as i32)..=d.kappa as i32).enumerate() {
        x.columns_mut(j * n, n).copy_from(&other.b().coeff(lag));
        x.columns_mut(n * k + j * d.m, d.m).copy_from(&bundle.a_plus.coeff(lag));
    }
    let kernel_vec = DVector::from_column_slice(x.as_slice());
    // vec(X P) = (P' ⊗ I_n) vec(X).
    let residual = max_abs(&(&x * &sys.p));
    let limit = tol.equivalence * max_abs(&x).max(1.0) * max_abs(&sys.p).max(1.0);
    Ok(EquivalenceResult { equivalent: residual <= limit, residual, limit, kernel_vec })
}

/// `R̄ = [R_B | 0 | R_A]`: zero columns for the `A^+` lags `-λ..-1` that the
/// restrictions do not see. `width` is `n` for the system, `1` per equation.
pub fn pad_restriction(r: &DMatrix<f64>, d: &Dims, width: usize) -> DMatrix<f64> {
    let nb = width * d.n * d.k();
    let pad = width * d.m * d.lambda;
    let mut out = DMatrix::zeros(r.nrows(), r.ncols() + pad);
    out.columns_mut(0, nb).copy_from(&r.columns(0, nb));
    out.columns_mut(nb + pad, r.ncols() - nb).copy_from(&r.columns(nb, r.ncols() - nb));
    out
}

fn check_rhs_nonzero(u: &DVector<f64>) -> Result<()> {
    if u.iter().all(|&v| v == 0.0) {
        return Err(RatexError::ZeroRestrictionRhs);
    }
    Ok(())
}

fn membership_warning(r: &DMatrix<f64>, u: &DVector<f64>, x: &DVector<f64>) -> Option<String> {
    let res = (r * x - u).amax();
    let lim = 1e-8 * (1.0 + u.amax());
    (res > lim).then(|| format!("restrictions not satisfied at the point (residual {res:.3e})"))
}

/// Full-column-rank test of `M = [P'⊗I_n ; R̄]`, required rank `n(n+m)(κ+λ+1)`.
pub fn ident_test_affine(sys: &IdentSystem, restr: &AffineRestriction, tol: &ToleranceConfig) -> Result<RankReport> {
    let d = sys.dims;
    if restr.r.ncols() != d.system_len() {
        return Err(RatexError::Restriction(format!(
            "R has {} columns, expected n^2(kappa+lambda+1) + nm(kappa+1) = {}",
            restr.r.ncols(),
            d.system_len()
        )));
    }
    if restr.r.nrows() != restr.u.len() {
        return Err(RatexError::Restriction("R and u row counts differ".into()));
    }
    check_rhs_nonzero(&restr.u)?;
    let m = system_matrix(sys, &pad_restriction(&restr.r, &d, d.n));
    let mut rep = rank_report(&m, d.n * (d.n + d.m) * d.k(), tol);
    if let Some(w) = sys.point.as_ref().and_then(|x| membership_warning(&restr.r, &restr.u, x)) {
        rep.warnings.push(w);
    }
    Ok(rep)
}

/// `[P'⊗I_n ; R̄]` for an already padded `R̄`.
pub fn system_matrix(sys: &IdentSystem, rbar: &DMatrix<f64>) -> DMatrix<f64> {
    let kp = sys.kernel_matrix();
    let mut m = DMatrix::zeros(kp.nrows() + rbar.nrows(), kp.ncols());
    m.rows_mut(0, kp.nrows()).copy_from(&kp);
    m.rows_mut(kp.nrows(), rbar.nrows()).copy_from(rbar);
    m
}

/// `[P' ; R̄_i]` for an already padded `R̄_i`.
pub fn equation_matrix(sys: &IdentSystem, rbar: &DMatrix<f64>) -> DMatrix<f64> {
    let pt = sys.p.transpose();
    let mut m = DMatrix::zeros(pt.nrows() + rbar.nrows(), pt.ncols());
    m.rows_mut(0, pt.nrows()).copy_from(&pt);
    m.rows_mut(pt.nrows(), rbar.nrows()).copy_from(rbar);
    m
}

/// Full-column-rank test of `M_i = [P' ; R̄_i]`, required rank `(n+m)(κ+λ+1)`.
pub fn ident_test_equation(sys: &IdentSystem, restr: &EquationRestriction, tol: &ToleranceConfig) -> Result<RankReport> {
    let d = sys.dims;
    if restr.equation >= d.n {
        return Err(RatexError::Restriction(format!("equation {} out of range 1..={}", restr.equation + 1, d.n)));
    }
    if restr.r.ncols() != d.equation_len() {
        return Err(RatexError::Restriction(format!(
            "R_i has {} columns, expected n(kappa+lambda+1) + m(kappa+1) = {}",
            restr.r.ncols(),
            d.equation_len()
        )));
    }
    if restr.r.nrows() != restr.u.len() {
        return Err(RatexError::Restriction("R_i and u_i row counts differ".into()));
    }
    check_rhs_nonzero(&restr.u)?;
    let m = equation_matrix(sys, &pad_restriction(&restr.r, &d, 1));
    let mut rep = rank_report(&m, (d.n + d.m) * d.k(), tol);
    if let Some(x) = &sys.point {
        let xi = DVector::from_iterator(d.equation_len(), (0..d.equation_len()).map(|c| x[c * d.n + restr.equation]));
        if let Some(w) = membership_warning(&restr.r, &restr.u, &xi) {
            rep.warnings.push(w);
        }
    }
    Ok(rep)
}

/// Banded block-Toeplitz `D` with `N = 1 + (n+1)κ` block rows; row block `r`
/// holds `B_j` and `A_j` at column block `r + j` of the respective halves.
pub fn ds_matrix(model: &Model) -> DMatrix<f64> {
    let d = Dims::of(model);
    let nb = 1 + (d.n + 1) * d.kappa;
    let (n, m) = (d.n, d.m);
    let mut out = DMatrix::zeros(n * nb, (n + m) * nb);
    for r in 0..nb {
        for j in 0..=d.kappa {
            let c = r + j;
            if c >= nb {
                break;
            }
            out.view_mut((r * n, c * n), (n, n)).copy_from(&model.b().coeff(j as i32));
            out.view_mut((r * n, n * nb + c * m), (n, m)).copy_from(&model.a().coeff(j as i32));
        }
    }
    out
}

/// Rank test of `R_DS (D'⊗I_n)` with `R_DS = [R E ; E_⊥]`, required rank
/// `n²(1+(n+1)κ)`. Only defined for `λ = 0`.
pub fn ds_criterion(model: &Model, restr: &AffineRestriction, tol: &ToleranceConfig) -> Result<RankReport> {
    let d = Dims::of(model);
    if d.lambda != 0 {
        return Err(RatexError::NotVarma(d.lambda));
    }
    if restr.r.ncols() != d.system_len() {
        return Err(RatexError::Restriction(format!("R has {} columns, expected {}", restr.r.ncols(), d.system_len())));
    }
    check_rhs_nonzero(&restr.u)?;
    let (n, m) = (d.n, d.m);
    let nb = 1 + (n + 1) * d.kappa;
    let total = n * (n + m) * nb;
    // Positions of Y_0..Y_κ, X_0..X_κ inside vec([Y_0..Y_{N-1} | X_0..X_{N-1}]).
    let mut kept = Vec::with_capacity(d.system_len());
    kept.extend(0..n * n * (d.kappa + 1));
    kept.extend((0..n * m * (d.kappa + 1)).map(|i| n * n * nb + i));
    let mut is_kept = vec![false; total];
    for &i in &kept {
        is_kept[i] = true;
    }
    let dropped: Vec<usize> = (0..total).filter(|&i| !is_kept[i]).collect();

    let mut rds = DMatrix::zeros(restr.r.nrows() + dropped.len(), total);
    for (c, &i) in kept.iter().enumerate() {
        rds.view_mut((0, i), (restr.r.nrows(), 1)).copy_from(&restr.r.column(c));
    }
    for (row, &i) in dropped.iter().enumerate() {
        rds[(restr.r.nrows() + row, i)] = 1.0;
    }
    let dk = kron_identity(&ds_matrix(model).transpose(), n);
    let mat = &rds * dk;
    let mut rep = rank_report(&mat, n * n * nb, tol);
    if let Some(w) = membership_warning(&restr.r, &restr.u, &system_vec(model)) {
        rep.warnings.push(w);
    }
    Ok(rep)
}
