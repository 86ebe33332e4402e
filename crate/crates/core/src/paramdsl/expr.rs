//! Rational expressions over named parameters.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' INT)?
//! atom   := NUMBER | IDENT ('[' '-'? INT ']')* | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`.

use std::fmt;

use crate::error::{RatexError, Result};

/// Denominators smaller than this in magnitude are treated as poles.
pub const MIN_DENOMINATOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Identifier with optional bracket indices, e.g. `B[-1][1][2]`.
    Var(String, Vec<i64>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string(), Vec::new())
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var(..) => 5,
        }
    }

    /// Evaluates with `lookup` resolving identifiers.
    pub fn eval(&self, lookup: &dyn Fn(&str, &[i64]) -> Result<f64>) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(name, idx) => lookup(name, idx)?,
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Pow(e, k) => e.eval(lookup)?.powi(*k as i32),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(lookup)?, r.eval(lookup)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.abs() < MIN_DENOMINATOR {
                            return Err(RatexError::DivisionByZero(self.to_string()));
                        }
                        a / b
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(RatexError::Evaluation(format!("non-finite value in {self}")));
        }
        Ok(v)
    }

    /// Every identifier occurring in the expression, with its indices.
    pub fn identifiers(&self) -> Vec<(&str, &[i64])> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids<'a>(&'a self, out: &mut Vec<(&'a str, &'a [i64])>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n, i) => out.push((n.as_str(), i.as_slice())),
            Expr::Neg(e) | Expr::Pow(e, _) => e.collect_ids(out),
            Expr::Bin(_, l, r) => {
                l.collect_ids(out);
                r.collect_ids(out);
            }
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.prec() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(name, idx) => {
                write!(f, "{name}")?;
                for i in idx {
                    write!(f, "[{i}]")?;
                }
                Ok(())
            }
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_child(f, 3)
            }
            Expr::Pow(e, k) => {
                e.fmt_child(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Bin(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                l.fmt_child(f, p)?;
                write!(f, " {sym} ")?;
                // Left associativity: an equal-precedence right operand needs parentheses.
                r.fmt_child(f, p + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src, toks: Vec::new() };
        lx.scan()?;
        Ok(lx.toks)
    }

    fn scan(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &self.src[start..i];
                let v: f64 = text.parse().map_err(|_| err(start, format!("malformed number '{text}'")))?;
                let integer = text.bytes().all(|b| b.is_ascii_digit());
                self.toks.push((Tok::Num(v, integer), start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                self.toks.push((Tok::Ident(self.src[start..i].to_string()), start));
            } else if "+-*/^()[]".contains(c) {
                self.toks.push((Tok::Sym(c), i));
                i += 1;
            } else {
                let ch = self.src[i..].chars().next().unwrap_or(c);
                return Err(err(i, format!("unexpected character '{ch}'")));
            }
        }
        self.toks.push((Tok::End, self.src.len()));
        Ok(())
    }
}

/// Parse error at byte offset `pos` of a single-line source; column is 1-based.
fn err(pos: usize, message: String) -> RatexError {
    RatexError::Parse { line: 1, column: pos + 1, message }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> RatexError {
        let found = match self.peek() {
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::End => "end of input".to_string(),
        };
        err(self.pos(), format!("expected {what}, found {found}"))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return match self.peek().clone() {
                Tok::Num(v, true) if v <= u32::MAX as f64 => {
                    self.bump();
                    Ok(Expr::Pow(Box::new(base), v as u32))
                }
                _ => Err(self.unexpected("a non-negative integer exponent")),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.bump();
                let mut idx = Vec::new();
                while self.eat('[') {
                    let neg = self.eat('-');
                    match self.peek().clone() {
                        Tok::Num(v, true) => {
                            self.bump();
                            idx.push(if neg { -(v as i64) } else { v as i64 });
                        }
                        _ => return Err(self.unexpected("an integer index")),
                    }
                    if !self.eat(']') {
                        return Err(self.unexpected("']'"));
                    }
                }
                Ok(Expr::Var(name, idx))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected("')'"));
                }
                Ok(e)
            }
            _ => Err(self.unexpected("a number, identifier or '('")),
        }
    }
}

/// Parses one expression; errors report line 1 and a 1-based column.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { toks, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
