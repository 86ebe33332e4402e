//! JSON model and restriction files.
//!
//! Model file (numeric):
//!
//! ```json
//! { "n": 1, "m": 1, "lambda": 1, "kappa": 1,
//!   "B": { "-1": [[0.333]], "0": [[1.0]], "1": [[0.5]] },
//!   "A": { "0": [[1.0]], "1": [[0.5]] } }
//! ```
//!
//! Parametrized models replace `B`/`A` by a `parametrized` object whose
//! entries are numbers or expression strings. A file that does not start
//! with `{` is read in the plain-text model format of `ratex_core::paramdsl`.
//!
//! Restriction file: any of `pins` (1-based rows/columns), dense `R`/`u`,
//! an optional 1-based `equation`, and `nonlinear` expression strings.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ratex_core::identcore::{AffineRestriction, Block, Dims, EquationRestriction};
use ratex_core::linalg::{numerical_rank, singular_values};
use ratex_core::paramdsl::{parse_expr, parse_model, Expr, ParamMap};
use ratex_core::{DMatrix, LaurentMatrix, Model};
use serde::Deserialize;

pub type Grid = Vec<Vec<f64>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    pub lambda: usize,
    pub kappa: usize,
    #[serde(rename = "B")]
    pub b: Option<BTreeMap<String, Grid>>,
    #[serde(rename = "A")]
    pub a: Option<BTreeMap<String, Grid>>,
    pub parametrized: Option<ParamSection>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Num(f64),
    Expr(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    pub params: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    #[serde(rename = "B", default)]
    pub b: BTreeMap<String, Vec<Vec<Entry>>>,
    #[serde(rename = "A", default)]
    pub a: BTreeMap<String, Vec<Vec<Entry>>>,
}

/// What a model file contains.
#[derive(Debug)]
pub enum Loaded {
    Numeric(Model),
    Parametrized(ParamMap),
}

fn parse_lag(key: &str, what: &str) -> Result<i32> {
    key.trim().parse().with_context(|| format!("{what}: lag key '{key}' is not an integer"))
}

fn check_grid<T>(g: &[Vec<T>], rows: usize, cols: usize, what: &str) -> Result<()> {
    if g.len() != rows || g.iter().any(|r| r.len() != cols) {
        bail!("{what}: expected a {rows}x{cols} array");
    }
    Ok(())
}

fn lag_range(block: &str, lambda: usize, kappa: usize) -> (i32, i32) {
    if block == "B" {
        (-(lambda as i32), kappa as i32)
    } else {
        (0, kappa as i32)
    }
}

fn numeric_block(
    map: &BTreeMap<String, Grid>,
    block: &str,
    rows: usize,
    cols: usize,
    lambda: usize,
    kappa: usize,
) -> Result<LaurentMatrix> {
    let (lo, hi) = lag_range(block, lambda, kappa);
    let mut coeffs = vec![DMatrix::zeros(rows, cols); (hi - lo + 1) as usize];
    for (key, grid) in map {
        let lag = parse_lag(key, block)?;
        if lag < lo || lag > hi {
            bail!("{block}: lag {lag} outside {lo}..={hi}");
        }
        check_grid(grid, rows, cols, &format!("{block}[{lag}]"))?;
        coeffs[(lag - lo) as usize] = DMatrix::from_fn(rows, cols, |r, c| grid[r][c]);
    }
    Ok(LaurentMatrix::new(rows, cols, lo, coeffs)?)
}

impl ModelFile {
    pub fn into_loaded(self) -> Result<Loaded> {
        if self.n == 0 || self.m == 0 {
            bail!("n and m must be positive");
        }
        match (self.b, self.a, self.parametrized) {
            (Some(b), Some(a), None) => {
                let b = numeric_block(&b, "B", self.n, self.n, self.lambda, self.kappa)?;
                let a = numeric_block(&a, "A", self.n, self.m, self.lambda, self.kappa)?;
                Ok(Loaded::Numeric(Model::new(b, a, self.lambda, self.kappa)?))
            }
            (None, None, Some(p)) => {
                if p.domain.len() != p.params.len() {
                    bail!("parametrized: {} parameters but {} domain intervals", p.params.len(), p.domain.len());
                }
                let domain = p.domain.iter().map(|d| (d[0], d[1])).collect();
                let mut map = ParamMap::zeros(p.params, domain, self.n, self.m, self.lambda, self.kappa)?;
                for (block, entries, cols) in [(Block::B, &p.b, self.n), (Block::A, &p.a, self.m)] {
                    let name = if block == Block::B { "B" } else { "A" };
                    for (key, grid) in entries {
                        let lag = parse_lag(key, name)?;
                        check_grid(grid, self.n, cols, &format!("{name}[{lag}]"))?;
                        for (r, row) in grid.iter().enumerate() {
                            for (c, e) in row.iter().enumerate() {
                                let expr = match e {
                                    Entry::Num(v) => Expr::Num(*v),
                                    Entry::Expr(s) => {
                                        parse_expr(s).with_context(|| format!("{name}[{key}][{}][{}]", r + 1, c + 1))?
                                    }
                                };
                                map.set(block, lag, r, c, expr)?;
                            }
                        }
                    }
                }
                Ok(Loaded::Parametrized(map))
            }
            _ => bail!("a model file needs either both \"B\" and \"A\" or a \"parametrized\" section, not both"),
        }
    }
}

pub fn load_model_file(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        file.into_loaded().with_context(|| format!("in {}", path.display()))
    } else {
        Ok(Loaded::Parametrized(parse_model(&text).with_context(|| format!("in {}", path.display()))?))
    }
}

pub fn load_numeric_model(path: &Path) -> Result<Model> {
    match load_model_file(path)? {
        Loaded::Numeric(m) => Ok(m),
        Loaded::Parametrized(_) => bail!("{}: expected a numeric model, found a parametrized one", path.display()),
    }
}

pub fn load_param_model(path: &Path) -> Result<ParamMap> {
    match load_model_file(path)? {
        Loaded::Parametrized(p) => Ok(p),
        Loaded::Numeric(_) => bail!("{}: expected a parametrized model", path.display()),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pin {
    pub block: String,
    pub lag: i32,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionFile {
    #[serde(default)]
    pub pins: Vec<Pin>,
    #[serde(rename = "R")]
    pub r: Option<Vec<Vec<f64>>>,
    pub u: Option<Vec<f64>>,
    /// 1-based equation index.
    pub equation: Option<usize>,
    #[serde(default)]
    pub nonlinear: Vec<String>,
}

/// Compiled affine part of a restriction file.
#[derive(Debug, Clone)]
pub enum Affine {
    System(AffineRestriction),
    Equation(EquationRestriction),
}

impl Affine {
    pub fn r(&self) -> &DMatrix<f64> {
        match self {
            Affine::System(a) => &a.r,
            Affine::Equation(e) => &e.r,
        }
    }

    pub fn u(&self) -> &ratex_core::DVector<f64> {
        match self {
            Affine::System(a) => &a.u,
            Affine::Equation(e) => &e.u,
        }
    }

    pub fn equation(&self) -> Option<usize> {
        match self {
            Affine::System(_) => None,
            Affine::Equation(e) => Some(e.equation),
        }
    }
}

pub fn load_restriction_file(path: &Path) -> Result<RestrictionFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn block_of(name: &str) -> Result<Block> {
    match name {
        "B" => Ok(Block::B),
        "A" => Ok(Block::A),
        other => bail!("pin block must be \"B\" or \"A\", found {other:?}"),
    }
}

impl RestrictionFile {
    pub fn has_affine(&self) -> bool {
        !self.pins.is_empty() || self.r.is_some()
    }

    /// 0-based equation index, validated against `d`.
    pub fn equation_index(&self, d: &Dims) -> Result<Option<usize>> {
        match self.equation {
            None => Ok(None),
            Some(0) => bail!("equation indices are 1-based"),
            Some(i) if i > d.n => bail!("equation {i} out of range 1..={}", d.n),
            Some(i) => Ok(Some(i - 1)),
        }
    }

    /// Compiles pins and dense rows into `(R, u)`, stacked in that order.
    /// Also returns a warning when `R` lacks full row rank.
    pub fn compile(&self, d: &Dims) -> Result<(Affine, Option<String>)> {
        let eq = self.equation_index(d)?;
        let width = if eq.is_some() { d.equation_len() } else { d.system_len() };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for p in &self.pins {
            if p.row == 0 || p.col == 0 {
                bail!("pin rows and columns are 1-based");
            }
            let block = block_of(&p.block)?;
            let idx = match eq {
                None => d.system_index(block, p.lag, p.row - 1, p.col - 1)?,
                Some(i) => {
                    if p.row - 1 != i {
                        bail!("pin {}[{}] row {} is not in equation {}", p.block, p.lag, p.row, i + 1);
                    }
                    d.equation_index(block, p.lag, p.col - 1)?
                }
            };
            let mut row = vec![0.0; width];
            row[idx] = 1.0;
            rows.push(row);
            rhs.push(p.value);
        }
        match (&self.r, &self.u) {
            (Some(r), Some(u)) => {
                if r.len() != u.len() {
                    bail!("R has {} rows but u has {} entries", r.len(), u.len());
                }
                for (i, row) in r.iter().enumerate() {
                    if row.len() != width {
                        bail!("R row {} has {} entries, expected {width}", i + 1, row.len());
                    }
                }
                rows.extend(r.iter().cloned());
                rhs.extend(u.iter().copied());
            }
            (None, None) => {}
            _ => bail!("\"R\" and \"u\" must be given together"),
        }
        if rows.is_empty() {
            bail!("the restriction file has no affine restrictions");
        }
        let r = DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]);
        let u = ratex_core::DVector::from_vec(rhs);
        let rank = numerical_rank(&singular_values(&r), r.nrows(), r.ncols(), 1e-10);
        let warning = (rank < r.nrows()).then(|| format!("R has {} rows but rank {rank}; redundant restrictions", r.nrows()));
        let affine = match eq {
            None => Affine::System(AffineRestriction::new(r, u)?),
            Some(i) => Affine::Equation(EquationRestriction::new(i, r, u)?),
        };
        Ok((affine, warning))
    }
}
