//! Local identification under nonlinear restrictions `R(B, A) = 0`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::expr::{parse_expr, Expr};
use crate::error::{RatexError, Result};
use crate::identcore::{
    equation_matrix, model_from_system_vec, pad_restriction, rank_report, system_matrix, system_vec, Block, Dims, IdentSystem,
    RankReport,
};
use crate::polylab::Model;
use crate::resolve::{required_horizon, solve};
use crate::tol::ToleranceConfig;

/// A restriction map evaluated on the system coefficient vector
/// `vec([B_{-λ} … B_κ | A_0 … A_κ])`.
pub trait ResidualMap: Sync {
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// `Some(i)` when the map restricts equation `i` (0-based) only.
    fn equation(&self) -> Option<usize> {
        None
    }
}

/// `x ↦ R x − u`.
#[derive(Debug, Clone)]
pub struct AffineResidualMap {
    pub r: DMatrix<f64>,
    pub u: DVector<f64>,
    pub equation: Option<usize>,
    pub dims: Dims,
}

impl ResidualMap for AffineResidualMap {
    fn output_dim(&self) -> usize {
        self.r.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let y = match self.equation {
            None => x.clone(),
            Some(i) => {
                DVector::from_iterator(self.dims.equation_len(), (0..self.dims.equation_len()).map(|c| x[c * self.dims.n + i]))
            }
        };
        if y.len() != self.r.ncols() {
            return Err(RatexError::Restriction(format!("R has {} columns, vector has {}", self.r.ncols(), y.len())));
        }
        Ok(&self.r * y - &self.u)
    }

    fn equation(&self) -> Option<usize> {
        self.equation
    }
}

/// Expressions over coefficient names `B[lag][row][col]` and
/// `A[lag][row][col]` (1-based row and column), each required to vanish.
#[derive(Debug, Clone)]
pub struct ExprResidualMap {
    exprs: Vec<Expr>,
    dims: Dims,
    equation: Option<usize>,
}

impl ExprResidualMap {
    /// Parses the expressions; in equation mode (`equation = Some(i)`, 0-based)
    /// every coefficient referenced must belong to row `i`.
    pub fn parse(sources: &[String], dims: Dims, equation: Option<usize>) -> Result<Self> {
        let mut exprs = Vec::with_capacity(sources.len());
        for (k, src) in sources.iter().enumerate() {
            let e = parse_expr(src).map_err(|e| match e {
                RatexError::Parse { column, message, .. } => RatexError::Parse { line: k + 1, column, message },
                other => other,
            })?;
            for (name, idx) in e.identifiers() {
                let pos = coefficient_index(&dims, name, idx)?;
                if let Some(i) = equation {
                    if pos % dims.n != i {
                        return Err(RatexError::Restriction(format!("{name}{idx:?} is not a coefficient of equation {}", i + 1)));
                    }
                }
            }
            exprs.push(e);
        }
        Ok(Self { exprs, dims, equation })
    }
}

fn coefficient_index(d: &Dims, name: &str, idx: &[i64]) -> Result<usize> {
    let block = match name {
        "B" => Block::B,
        "A" => Block::A,
        _ => {
            return Err(RatexError::Restriction(format!(
                "unknown identifier '{name}' (expected B[lag][row][col] or A[lag][row][col])"
            )))
        }
    };
    if idx.len() != 3 || idx[1] < 1 || idx[2] < 1 {
        return Err(RatexError::Restriction(format!("{name} needs three indices [lag][row][col] with 1-based row/col")));
    }
    d.system_index(block, idx[0] as i32, idx[1] as usize - 1, idx[2] as usize - 1)
}

impl ResidualMap for ExprResidualMap {
    fn output_dim(&self) -> usize {
        self.exprs.len()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let lookup = |name: &str, idx: &[i64]| -> Result<f64> { Ok(x[coefficient_index(&self.dims, name, idx)?]) };
        let vals: Result<Vec<f64>> = self.exprs.iter().map(|e| e.eval(&lookup)).collect();
        Ok(DVector::from_vec(vals?))
    }

    fn equation(&self) -> Option<usize> {
        self.equation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Relative step; the step for coordinate `j` is `step * max(1, |x_j|)`.
    pub step: f64,
    /// Number of nearby points at which the rank is probed.
    pub probes: usize,
    /// Relative radius of the probe perturbations.
    pub probe_radius: f64,
    pub probe_seed: u64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: f64::EPSILON.cbrt(), probes: 6, probe_radius: 1e-4, probe_seed: 0x5eed }
    }
}

/// Central-difference Jacobian of `f` at `x`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, cfg: &FdConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let f0 = f(x)?;
    let mut jac = DMatrix::zeros(f0.len(), x.len());
    for j in 0..x.len() {
        let h = cfg.step * x[j].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        if fp.len() != f0.len() || fm.len() != f0.len() {
            return Err(RatexError::Evaluation("residual dimension changed between stencil points".into()));
        }
        jac.set_column(j, &((fp - fm) / (xp[j] - xm[j])));
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalVerdict {
    LocallyIdentified,
    /// Rank deficient with locally constant rank: non-identification follows
    /// only under that regularity condition.
    NotIdentifiedUnderRegularity,
    /// Rank deficient but the rank varies nearby; nothing can be concluded.
    Inconclusive,
}

impl LocalVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocalVerdict::LocallyIdentified => "locally_identified",
            LocalVerdict::NotIdentifiedUnderRegularity => "not_identified_under_regularity",
            LocalVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalReport {
    pub rank: RankReport,
    pub verdict: LocalVerdict,
    /// Ranks of `M` at the probe points.
    pub probe_ranks: Vec<usize>,
    pub rank_locally_constant: bool,
    pub notes: Vec<String>,
}

pub const REGULARITY_CAVEAT: &str =
    "M is not of full column rank: non-identification follows only if the rank of M is constant near the point (regularity condition)";

/// `M` at a model: `[P'⊗I_n ; ∇R̄]` or, in equation mode, `[P' ; ∇R̄_i]`.
fn local_matrix(model: &Model, map: &dyn ResidualMap, tol: &ToleranceConfig, fd: &FdConfig) -> Result<RankReport> {
    let d = Dims::of(model);
    let bundle = solve(model, required_horizon(d.n, d.kappa, d.lambda), tol)?;
    let sys = IdentSystem::from_bundle(&bundle, tol)?;
    let x0 = system_vec(model);
    match map.equation() {
        None => {
            let jac = fd_jacobian(|x| map.eval(x), &x0, fd)?;
            let m = system_matrix(&sys, &pad_restriction(&jac, &d, d.n));
            Ok(rank_report(&m, d.n * (d.n + d.m) * d.k(), tol))
        }
        Some(i) => {
            if i >= d.n {
                return Err(RatexError::Restriction(format!("equation {} out of range", i + 1)));
            }
            let idx: Vec<usize> = (0..d.equation_len()).map(|c| c * d.n + i).collect();
            let y0 = DVector::from_iterator(idx.len(), idx.iter().map(|&k| x0[k]));
            let embed = |y: &DVector<f64>| {
                let mut x = x0.clone();
                for (t, &k) in idx.iter().enumerate() {
                    x[k] = y[t];
                }
                x
            };
            let jac = fd_jacobian(|y| map.eval(&embed(y)), &y0, fd)?;
            let m = equation_matrix(&sys, &pad_restriction(&jac, &d, 1));
            Ok(rank_report(&m, (d.n + d.m) * d.k(), tol))
        }
    }
}

/// Rank test with the finite-difference Jacobian of the restrictions, plus a
/// probe of the rank at nearby points when it is deficient.
pub fn local_ident(model: &Model, map: &dyn ResidualMap, tol: &ToleranceConfig, fd: &FdConfig) -> Result<LocalReport> {
    let x0 = system_vec(model);
    let r0 = map.eval(&x0)?;
    let resid = r0.amax();
    if resid > 1e-8 {
        return Err(RatexError::RestrictionNotSatisfied { residual: resid });
    }
    let rank = local_matrix(model, map, tol, fd)?;
    if rank.identified() {
        return Ok(LocalReport {
            rank,
            verdict: LocalVerdict::LocallyIdentified,
            probe_ranks: Vec::new(),
            rank_locally_constant: true,
            notes: Vec::new(),
        });
    }

    let d = Dims::of(model);
    let mut rng = ChaCha8Rng::seed_from_u64(fd.probe_seed);
    let radius = fd.probe_radius * x0.amax().max(1.0);
    let mut probe_ranks = Vec::new();
    let mut notes = vec![REGULARITY_CAVEAT.to_string()];
    let mut attempts = 0;
    while probe_ranks.len() < fd.probes && attempts < 4 * fd.probes.max(1) {
        attempts += 1;
        let dir = DVector::<f64>::from_fn(x0.len(), |_, _| StandardNormal.sample(&mut rng));
        let x = &x0 + dir * (radius / (x0.len() as f64).sqrt());
        let Ok(m) = model_from_system_vec(&d, &x) else { continue };
        if let Ok(rep) = local_matrix(&m, map, tol, fd) {
            probe_ranks.push(rep.numerical_rank);
        }
    }
    let constant = !probe_ranks.is_empty() && probe_ranks.iter().all(|&r| r == rank.numerical_rank);
    let verdict = if constant {
        notes.push(format!("rank {} observed at all {} probe points", rank.numerical_rank, probe_ranks.len()));
        LocalVerdict::NotIdentifiedUnderRegularity
    } else {
        notes.push(format!("rank varies near the point (probe ranks {probe_ranks:?}); no conclusion about identification"));
        LocalVerdict::Inconclusive
    };
    Ok(LocalReport { rank, verdict, probe_ranks, rank_locally_constant: constant, notes })
}
