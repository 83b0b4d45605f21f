//! Noncommutative rational expressions.
//!
//! An [`NcExpr`] is a purely formal tree over constants, the variables
//! `x1..xg`, sums, products, inverses and adjoints. Nothing is simplified at
//! construction except `adj(adj(r)) = r`; degenerate expressions such as
//! `inv(0)` are representable and only fail once evaluated.

mod equiv;
mod eval;
mod parse;
mod random;
mod series;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, MatC, C64};
use crate::linrep::LinearPencil;

pub use equiv::{matrix_equiv, random_tuple, EquivConfig, Verdict};
pub use eval::{eval_expr, eval_mat_expr};
pub use parse::{parse_expr, parse_mat_expr};
pub use random::{random_expr, RandomExprConfig};
pub use series::{series_expand, value_at_zero, SeriesTable};

#[derive(Clone, Debug, PartialEq)]
pub enum NcExpr {
    Const(C64),
    /// 1-based variable index.
    Var(usize),
    Add(Box<NcExpr>, Box<NcExpr>),
    Mul(Box<NcExpr>, Box<NcExpr>),
    Inv(Box<NcExpr>),
    Adj(Box<NcExpr>),
}

impl NcExpr {
    pub fn constant(z: C64) -> Self {
        NcExpr::Const(z)
    }

    pub fn real(x: f64) -> Self {
        NcExpr::Const(C64::new(x, 0.0))
    }

    pub fn var(index: usize) -> Self {
        assert!(index >= 1, "variables are numbered from 1");
        NcExpr::Var(index)
    }

    pub fn add(a: NcExpr, b: NcExpr) -> Self {
        NcExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: NcExpr, b: NcExpr) -> Self {
        NcExpr::Mul(Box::new(a), Box::new(b))
    }

    /// `a - b`, encoded as `a + (-1) * b`.
    pub fn sub(a: NcExpr, b: NcExpr) -> Self {
        NcExpr::add(a, NcExpr::neg(b))
    }

    pub fn neg(a: NcExpr) -> Self {
        NcExpr::mul(NcExpr::real(-1.0), a)
    }

    pub fn inv(a: NcExpr) -> Self {
        NcExpr::Inv(Box::new(a))
    }

    /// Adjoint node; a directly nested adjoint cancels.
    pub fn adj(a: NcExpr) -> Self {
        match a {
            NcExpr::Adj(inner) => *inner,
            other => NcExpr::Adj(Box::new(other)),
        }
    }

    /// Product of a list of factors, left to right.
    pub fn product(factors: impl IntoIterator<Item = NcExpr>) -> Self {
        let mut it = factors.into_iter();
        let first = it.next().unwrap_or_else(|| NcExpr::real(1.0));
        it.fold(first, NcExpr::mul)
    }

    /// Sum of a list of terms.
    pub fn sum(terms: impl IntoIterator<Item = NcExpr>) -> Self {
        let mut it = terms.into_iter();
        let first = it.next().unwrap_or_else(|| NcExpr::real(0.0));
        it.fold(first, NcExpr::add)
    }

    /// Largest variable index occurring in the tree (0 if none).
    pub fn max_var(&self) -> usize {
        match self {
            NcExpr::Const(_) => 0,
            NcExpr::Var(j) => *j,
            NcExpr::Add(a, b) | NcExpr::Mul(a, b) => a.max_var().max(b.max_var()),
            NcExpr::Inv(a) | NcExpr::Adj(a) => a.max_var(),
        }
    }

    pub fn check_arity(&self, arity: usize) -> Result<()> {
        let m = self.max_var();
        if m > arity {
            Err(Error::Arity { index: m, arity })
        } else {
            Ok(())
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            NcExpr::Const(_) | NcExpr::Var(_) => 1,
            NcExpr::Add(a, b) | NcExpr::Mul(a, b) => 1 + a.size() + b.size(),
            NcExpr::Inv(a) | NcExpr::Adj(a) => 1 + a.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            NcExpr::Const(_) | NcExpr::Var(_) => 0,
            NcExpr::Add(a, b) | NcExpr::Mul(a, b) => 1 + a.depth().max(b.depth()),
            NcExpr::Inv(a) | NcExpr::Adj(a) => 1 + a.depth(),
        }
    }

    /// `½ (r + adj(r))`.
    pub fn symmetrized(&self) -> NcExpr {
        NcExpr::mul(
            NcExpr::real(0.5),
            NcExpr::add(self.clone(), NcExpr::adj(self.clone())),
        )
    }
}

/// Structural adjoint: products reverse, inverses commute with the adjoint,
/// constants are conjugated and variables are fixed. The result contains no
/// `Adj` nodes.
pub fn adjoint_expr(r: &NcExpr) -> NcExpr {
    fn go(r: &NcExpr, flip: bool) -> NcExpr {
        match r {
            NcExpr::Const(z) => NcExpr::Const(if flip { z.conj() } else { *z }),
            NcExpr::Var(j) => NcExpr::Var(*j),
            NcExpr::Add(a, b) => NcExpr::add(go(a, flip), go(b, flip)),
            NcExpr::Mul(a, b) if flip => NcExpr::mul(go(b, flip), go(a, flip)),
            NcExpr::Mul(a, b) => NcExpr::mul(go(a, flip), go(b, flip)),
            NcExpr::Inv(a) => NcExpr::inv(go(a, flip)),
            NcExpr::Adj(a) => go(a, !flip),
        }
    }
    go(r, true)
}

fn fmt_f64(x: f64) -> String {
    // Debug formatting is the shortest representation that round-trips.
    format!("{x:?}")
}

impl fmt::Display for NcExpr {
    /// Fully parenthesized normal form; parsing it reproduces the tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NcExpr::Const(z) => {
                let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                write!(f, "({}{}{}i)", fmt_f64(z.re), sign, fmt_f64(z.im.abs()))
            }
            NcExpr::Var(j) if *j <= 9 => write!(f, "x{j}"),
            NcExpr::Var(j) => write!(f, "x{{{j}}}"),
            NcExpr::Add(a, b) => write!(f, "({a} + {b})"),
            NcExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            NcExpr::Inv(a) => write!(f, "inv({a})"),
            NcExpr::Adj(a) => write!(f, "adj({a})"),
        }
    }
}

impl Serialize for NcExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NcExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_expr(&text, usize::MAX).map_err(serde::de::Error::custom)
    }
}

/// A `rows × cols` matrix of expressions, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatNcExpr {
    rows: usize,
    cols: usize,
    entries: Vec<NcExpr>,
}

impl MatNcExpr {
    pub fn new(rows: usize, cols: usize, entries: Vec<NcExpr>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} expressions for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(MatNcExpr {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<NcExpr>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged expression matrix".into()));
        }
        MatNcExpr::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn scalar(r: NcExpr) -> Self {
        MatNcExpr {
            rows: 1,
            cols: 1,
            entries: vec![r],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &NcExpr {
        &self.entries[i * self.cols + j]
    }

    pub fn max_var(&self) -> usize {
        self.entries.iter().map(NcExpr::max_var).max().unwrap_or(0)
    }

    /// Entrywise adjoint of the transpose.
    pub fn adjoint(&self) -> MatNcExpr {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(NcExpr::adj(self.get(i, j).clone()));
            }
        }
        MatNcExpr {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }
}

/// A point `X = (X_1, …, X_g)` of square matrices of a common size.
#[derive(Clone, Debug, PartialEq)]
pub struct MatTuple {
    mats: Vec<MatC>,
    n: usize,
}

impl MatTuple {
    pub fn new(mats: Vec<MatC>) -> Result<Self> {
        let n = mats.first().map_or(1, MatC::nrows);
        for m in &mats {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::ShapeMismatch(
                    "matrix tuple entries must share a square size".into(),
                ));
            }
            if !linalg::is_finite(m) {
                return Err(Error::NonFinite);
            }
        }
        Ok(MatTuple { mats, n })
    }

    /// Tuple of `1×1` matrices.
    pub fn scalars(values: &[C64]) -> Self {
        MatTuple {
            mats: values
                .iter()
                .map(|&z| MatC::from_element(1, 1, z))
                .collect(),
            n: 1,
        }
    }

    /// Zero tuple of the given arity and size.
    pub fn zeros(arity: usize, n: usize) -> Self {
        MatTuple {
            mats: vec![MatC::zeros(n, n); arity],
            n,
        }
    }

    pub fn arity(&self) -> usize {
        self.mats.len()
    }

    /// Common matrix size.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize) -> &MatC {
        &self.mats[j]
    }

    pub fn mats(&self) -> &[MatC] {
        &self.mats
    }

    /// `(X_1*, …, X_g*)`.
    pub fn adjoint(&self) -> MatTuple {
        MatTuple {
            mats: self.mats.iter().map(|m| m.adjoint()).collect(),
            n: self.n,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.mats
            .iter()
            .all(|m| linalg::hermitian_defect(m) <= tol * (1.0 + linalg::max_norm(m)))
    }
}

/// Evaluates `Λ⁽⁰⁾ ⊗ I + Σ Λ⁽ʲ⁾ ⊗ X_j`.
pub fn eval_pencil(pencil: &LinearPencil, x: &MatTuple) -> Result<MatC> {
    pencil.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adj_of_adj_cancels() {
        let r = NcExpr::adj(NcExpr::adj(NcExpr::var(1)));
        assert_eq!(r, NcExpr::var(1));
    }

    #[test]
    fn structural_adjoint_rules() {
        let prod = NcExpr::mul(NcExpr::var(1), NcExpr::var(2));
        assert_eq!(
            adjoint_expr(&prod),
            NcExpr::mul(NcExpr::var(2), NcExpr::var(1))
        );
        let inv = NcExpr::inv(prod.clone());
        assert_eq!(adjoint_expr(&inv), NcExpr::inv(adjoint_expr(&prod)));
        let c = NcExpr::constant(C64::new(2.0, 3.0));
        assert_eq!(adjoint_expr(&c), NcExpr::constant(C64::new(2.0, -3.0)));
    }

    #[test]
    fn display_round_trips() {
        let r = NcExpr::sub(
            NcExpr::inv(NcExpr::add(NcExpr::real(1.0), NcExpr::var(12))),
            NcExpr::adj(NcExpr::constant(C64::new(-0.1, -2.5e-7))),
        );
        let printed = r.to_string();
        assert_eq!(parse_expr(&printed, 12).unwrap(), r);
    }
}
