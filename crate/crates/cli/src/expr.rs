//! Algebra expressions over catalog entries, e.g. `add(abs, scale(-1, abs))`.
//!
//! Grammar: `expr := name | op(expr, expr) | scale(number, expr) | compose(name, expr)`
//! with `op` one of `add`, `mul`, `min`, `max`. Leaves are catalog names and
//! carry their Clarke gradient; operators apply the matching calculus rule.

use std::fmt;
use std::str::FromStr;

use setcalc::{
    class_add, class_max, class_min, class_mul, class_scale, clarke_gradient, grad_add, grad_chain, grad_chain_with, grad_minmax,
    grad_product, grad_scale, ClassPair, Grid1D, GradientField, Which,
};

use crate::catalog::Entry;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Leaf(Entry),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
    Compose(Entry, Box<Expr>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> CliError {
        CliError::BadConfig(format!("expression {:?} at offset {}: {msg}", self.src, self.pos))
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn word(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| matches!(c, '(' | ')' | ',') || c.is_whitespace()).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn expr(&mut self) -> Result<Expr> {
        let name = self.word()?;
        if self.peek() != Some('(') {
            return Ok(Expr::Leaf(name.parse()?));
        }
        self.expect('(')?;
        let out = match name {
            "scale" => {
                let w = self.word()?;
                let lambda = w.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| self.err("expected a number"))?;
                self.expect(',')?;
                Expr::Scale(lambda, Box::new(self.expr()?))
            }
            "compose" => {
                let outer: Entry = self.word()?.parse()?;
                self.expect(',')?;
                Expr::Compose(outer, Box::new(self.expr()?))
            }
            "add" | "mul" | "min" | "max" => {
                let a = Box::new(self.expr()?);
                self.expect(',')?;
                let b = Box::new(self.expr()?);
                match name {
                    "add" => Expr::Add(a, b),
                    "mul" => Expr::Mul(a, b),
                    "min" => Expr::Min(a, b),
                    _ => Expr::Max(a, b),
                }
            }
            _ => return Err(CliError::UnknownFunction(name.to_string())),
        };
        self.expect(')')?;
        Ok(out)
    }
}

impl FromStr for Expr {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let e = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Leaf(e) => write!(f, "{e}"),
            Expr::Add(a, b) => write!(f, "add({a}, {b})"),
            Expr::Mul(a, b) => write!(f, "mul({a}, {b})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Scale(l, a) => write!(f, "scale({l}, {a})"),
            Expr::Compose(o, a) => write!(f, "compose({o}, {a})"),
        }
    }
}

/// Outer grid for a composition: the range of `inner` padded by a tenth of
/// its width (or by one for constant data), with as many nodes as `grid`.
fn range_grid(inner: &ClassPair<f64>, n: usize) -> Result<Grid1D<f64>> {
    let lo = inner.lower().values().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inner.upper().values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { (hi - lo) / 10.0 } else { 1.0 };
    Ok(Grid1D::new(lo - pad, hi + pad, n)?)
}

impl Expr {
    /// The class alone; unlike [`Expr::eval`] this accepts leaves with jumps.
    pub fn class(&self, grid: Grid1D<f64>) -> Result<ClassPair<f64>> {
        let pair = |a: &Expr, b: &Expr| -> Result<_> { Ok((a.class(grid)?, b.class(grid)?)) };
        Ok(match self {
            Expr::Leaf(e) => e.class(grid)?,
            Expr::Add(a, b) => pair(a, b).and_then(|(f, g)| Ok(class_add(&f, &g)?))?,
            Expr::Mul(a, b) => pair(a, b).and_then(|(f, g)| Ok(class_mul(&f, &g)?))?,
            Expr::Min(a, b) => pair(a, b).and_then(|(f, g)| Ok(class_min(&f, &g)?))?,
            Expr::Max(a, b) => pair(a, b).and_then(|(f, g)| Ok(class_max(&f, &g)?))?,
            Expr::Scale(l, a) => class_scale(*l, &a.class(grid)?)?,
            Expr::Compose(outer, a) => setcalc::class_map(&a.class(grid)?, |t| outer.value(t))?,
        })
    }

    /// The class and its gradient by the calculus rules.
    pub fn eval(&self, grid: Grid1D<f64>) -> Result<(ClassPair<f64>, GradientField<f64>)> {
        let pair = |a: &Expr, b: &Expr| -> Result<_> { Ok((a.eval(grid)?, b.eval(grid)?)) };
        Ok(match self {
            Expr::Leaf(e) => {
                let f = e.sample(grid)?;
                let df = clarke_gradient(&f)?;
                (setcalc::canonical_pair(&f)?, df)
            }
            Expr::Add(a, b) => {
                let ((f, df), (g, dg)) = pair(a, b)?;
                (class_add(&f, &g)?, grad_add(&df, &dg)?)
            }
            Expr::Mul(a, b) => {
                let ((f, df), (g, dg)) = pair(a, b)?;
                let d = grad_product(&f, &g, &df, &dg)?;
                (class_mul(&f, &g)?, d)
            }
            Expr::Min(a, b) | Expr::Max(a, b) => {
                let ((f, df), (g, dg)) = pair(a, b)?;
                if matches!(self, Expr::Min(..)) {
                    let d = grad_minmax(&f, &g, &df, &dg, Which::Min)?;
                    (class_min(&f, &g)?, d)
                } else {
                    let d = grad_minmax(&f, &g, &df, &dg, Which::Max)?;
                    (class_max(&f, &g)?, d)
                }
            }
            Expr::Scale(l, a) => {
                let (f, df) = a.eval(grid)?;
                (class_scale(*l, &f)?, grad_scale(*l, &df)?)
            }
            Expr::Compose(outer, a) => {
                let (f, df) = a.eval(grid)?;
                let og = range_grid(&f, grid.len())?;
                let phi = outer
                    .smooth(og)
                    .ok_or_else(|| CliError::BadConfig(format!("{outer} is not a smooth outer function")))??;
                let d = match outer.gradient(og.a()) {
                    // closed form: evaluate at the inner values, not between range nodes
                    Some(_) => grad_chain_with(|t| Ok(outer.gradient(t).map_or(f64::NAN, |g| g.0)), &f, &df)?,
                    None => grad_chain(&phi, &f, &df)?,
                };
                let lo = setcalc::class_map(&f, |t| outer.value(t))?;
                (lo, d)
            }
        })
    }
}
