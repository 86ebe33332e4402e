//! Deep-parameter maps `θ ↦ (B(θ), A(θ))`, nonlinear restriction maps, and
//! the generic and local identification procedures built on them.
//!
//! Model text format, one statement per line (`#` starts a comment):
//!
//! ```text
//! params theta1 theta2 theta3
//! domain theta1 0.5 1
//! domain theta2 -3 -0.5
//! domain theta3 -3 -0.2
//! dims 1 1 1 1            # n m lambda kappa
//! B -1 1 1 = theta1       # block lag row col = expr (1-based row/col)
//! B 0 1 1 = -((theta3/theta2)+1+theta1)
//! B 1 1 1 = 1
//! A 0 1 1 = 1/theta2
//! ```
//!
//! Entries not listed are zero.

mod expr;
mod generic;
mod local;

pub use expr::{parse_expr, BinOp, Expr, MIN_DENOMINATOR};
pub use generic::{generic_ident, point_ident, GenericReport, GenericRestriction, GenericVerdict, SamplerConfig, Witness};
pub use local::{
    fd_jacobian, local_ident, AffineResidualMap, ExprResidualMap, FdConfig, LocalReport, LocalVerdict, ResidualMap,
    REGULARITY_CAVEAT,
};

use nalgebra::DMatrix;

use crate::error::{RatexError, Result};
use crate::identcore::Block;
use crate::polylab::{LaurentMatrix, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamMap {
    pub params: Vec<String>,
    pub domain: Vec<(f64, f64)>,
    pub n: usize,
    pub m: usize,
    pub lambda: usize,
    pub kappa: usize,
    /// `b[lag + λ][row][col]`.
    pub b: Vec<Vec<Vec<Expr>>>,
    /// `a[lag][row][col]`.
    pub a: Vec<Vec<Vec<Expr>>>,
}

impl ParamMap {
    /// Map with all entries zero.
    pub fn zeros(params: Vec<String>, domain: Vec<(f64, f64)>, n: usize, m: usize, lambda: usize, kappa: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(RatexError::InvalidArgument("dimensions must be positive".into()));
        }
        if params.len() != domain.len() {
            return Err(RatexError::InvalidArgument("one domain interval per parameter is required".into()));
        }
        for (p, &(lo, hi)) in params.iter().zip(&domain) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(RatexError::InvalidArgument(format!("domain of {p} must be a finite interval")));
            }
        }
        let grid = |rows, cols, lags| vec![vec![vec![Expr::Num(0.0); cols]; rows]; lags];
        Ok(Self { b: grid(n, n, lambda + kappa + 1), a: grid(n, m, kappa + 1), params, domain, n, m, lambda, kappa })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// Sets one entry (0-based row/col) after checking its identifiers.
    pub fn set(&mut self, block: Block, lag: i32, row: usize, col: usize, e: Expr) -> Result<()> {
        for (name, idx) in e.identifiers() {
            if !idx.is_empty() || !self.params.iter().any(|p| p == name) {
                return Err(RatexError::InvalidArgument(format!("unknown identifier '{name}'")));
            }
        }
        let (l, k) = (self.lambda as i32, self.kappa as i32);
        let slot = match block {
            Block::B if (-l..=k).contains(&lag) && row < self.n && col < self.n => &mut self.b[(lag + l) as usize][row][col],
            Block::A if (0..=k).contains(&lag) && row < self.n && col < self.m => &mut self.a[lag as usize][row][col],
            _ => {
                return Err(RatexError::InvalidArgument(format!(
                    "entry {block:?} lag {lag} ({}, {}) is outside the declared shape",
                    row + 1,
                    col + 1
                )))
            }
        };
        *slot = e;
        Ok(())
    }

    pub fn in_domain(&self, theta: &[f64]) -> bool {
        theta.iter().zip(&self.domain).all(|(t, &(lo, hi))| (lo..=hi).contains(t))
    }
}

/// Numeric model at `θ`. Points outside the domain box are evaluated anyway;
/// callers may check [`ParamMap::in_domain`].
pub fn eval_model(map: &ParamMap, theta: &[f64]) -> Result<Model> {
    if theta.len() != map.dim() {
        return Err(RatexError::InvalidArgument(format!("expected {} parameters, got {}", map.dim(), theta.len())));
    }
    let lookup = |name: &str, _: &[i64]| -> Result<f64> {
        map.params
            .iter()
            .position(|p| p == name)
            .map(|i| theta[i])
            .ok_or_else(|| RatexError::Evaluation(format!("unknown identifier '{name}'")))
    };
    let mats = |grid: &Vec<Vec<Vec<Expr>>>, rows: usize, cols: usize| -> Result<Vec<DMatrix<f64>>> {
        grid.iter()
            .map(|lag| {
                let mut out = DMatrix::zeros(rows, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        out[(r, c)] = lag[r][c].eval(&lookup)?;
                    }
                }
                Ok(out)
            })
            .collect()
    };
    let b = LaurentMatrix::new(map.n, map.n, -(map.lambda as i32), mats(&map.b, map.n, map.n)?)?;
    let a = LaurentMatrix::new(map.n, map.m, 0, mats(&map.a, map.n, map.m)?)?;
    Model::new(b, a, map.lambda, map.kappa)
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> RatexError {
    RatexError::Parse { line, column, message: message.into() }
}

/// Parses the model text format described in the module docs.
pub fn parse_model(text: &str) -> Result<ParamMap> {
    let mut params: Option<(usize, Vec<String>)> = None;
    let mut domains: Vec<(usize, String, f64, f64)> = Vec::new();
    let mut dims: Option<[usize; 4]> = None;
    let mut entries: Vec<(usize, usize, Block, i32, usize, usize, Expr)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        let words = words_with_columns(body);
        let Some(&(kw_col, kw)) = words.first() else { continue };
        match kw {
            "params" => {
                if params.is_some() {
                    return Err(perr(line, kw_col, "duplicate 'params' statement"));
                }
                let mut names = Vec::new();
                for &(c, w) in &words[1..] {
                    if !is_ident(w) {
                        return Err(perr(line, c, format!("invalid parameter name '{w}'")));
                    }
                    if names.iter().any(|n| n == w) {
                        return Err(perr(line, c, format!("duplicate parameter '{w}'")));
                    }
                    names.push(w.to_string());
                }
                params = Some((line, names));
            }
            "domain" => {
                if words.len() != 4 {
                    return Err(perr(line, kw_col, "expected 'domain NAME LO HI'"));
                }
                let lo = number(line, words[2])?;
                let hi = number(line, words[3])?;
                if lo > hi {
                    return Err(perr(line, words[2].0, "domain lower bound exceeds upper bound"));
                }
                domains.push((line, words[1].1.to_string(), lo, hi));
            }
            "dims" => {
                if words.len() != 5 {
                    return Err(perr(line, kw_col, "expected 'dims n m lambda kappa'"));
                }
                let mut d = [0usize; 4];
                for (i, &(c, w)) in words[1..].iter().enumerate() {
                    d[i] = w.parse().map_err(|_| perr(line, c, format!("expected a non-negative integer, found '{w}'")))?;
                }
                if d[0] == 0 || d[1] == 0 {
                    return Err(perr(line, words[1].0, "n and m must be positive"));
                }
                dims = Some(d);
            }
            "B" | "A" => {
                let eq = body.find('=').ok_or_else(|| perr(line, kw_col, "expected '=' followed by an expression"))?;
                let head: Vec<_> = words.iter().filter(|(c, _)| *c <= eq).copied().collect();
                if head.len() != 4 {
                    return Err(perr(line, kw_col, format!("expected '{kw} lag row col = expr'")));
                }
                let lag: i32 = head[1].1.parse().map_err(|_| perr(line, head[1].0, "lag must be an integer"))?;
                let mut rc = [0usize; 2];
                for i in 0..2 {
                    let (c, w) = head[2 + i];
                    rc[i] = w
                        .parse::<usize>()
                        .ok()
                        .filter(|&v| v >= 1)
                        .ok_or_else(|| perr(line, c, "row and column indices start at 1"))?;
                }
                let src = &body[eq + 1..];
                let e = parse_expr(src).map_err(|e| match e {
                    RatexError::Parse { column, message, .. } => perr(line, eq + 1 + column, message),
                    other => other,
                })?;
                let block = if kw == "B" { Block::B } else { Block::A };
                entries.push((line, kw_col, block, lag, rc[0] - 1, rc[1] - 1, e));
            }
            other => return Err(perr(line, kw_col, format!("unknown statement '{other}'"))),
        }
    }

    let (_, names) = params.unwrap_or((0, Vec::new()));
    let [n, m, lambda, kappa] = dims.ok_or_else(|| perr(text.lines().count().max(1), 1, "missing 'dims' statement"))?;
    let mut domain = vec![None; names.len()];
    for (line, name, lo, hi) in domains {
        let i = names.iter().position(|p| *p == name).ok_or_else(|| perr(line, 8, format!("unknown parameter '{name}'")))?;
        domain[i] = Some((lo, hi));
    }
    let domain: Vec<(f64, f64)> = domain
        .into_iter()
        .zip(&names)
        .map(|(d, name)| d.ok_or_else(|| perr(1, 1, format!("parameter '{name}' has no domain"))))
        .collect::<Result<_>>()?;

    let mut map = ParamMap::zeros(names, domain, n, m, lambda, kappa)?;
    for (line, col, block, lag, r, c, e) in entries {
        map.set(block, lag, r, c, e).map_err(|err| perr(line, col, err.to_string()))?;
    }
    Ok(map)
}

fn words_with_columns(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices() {
        if ch.is_whitespace() || ch == '=' {
            if let Some(st) = start.take() {
                out.push((st + 1, &s[st..i]));
            }
            if ch == '=' {
                out.push((i + 1, "="));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((st + 1, &s[st..]));
    }
    out
}

fn number(line: usize, (col, w): (usize, &str)) -> Result<f64> {
    w.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| perr(line, col, format!("expected a number, found '{w}'")))
}

fn is_ident(w: &str) -> bool {
    let mut ch = w.chars();
    matches!(ch.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && ch.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
