//! Truncated formal power series of expressions regular at zero.

use serde::{Serialize, Serializer};

use super::{MatTuple, NcExpr};
use crate::error::{Error, Result};
use crate::linalg::{MatC, C64};

/// Below this modulus the constant term of an inverted subexpression counts
/// as zero.
const ZERO_TERM_TOL: f64 = 1e-12;

/// Coefficients `r_w` for all words `w` over `{1..g}` of length at most
/// `degree`.
///
/// Words of length `k` are stored densely: letter `j` (1-based) is digit
/// `j - 1` in a base-`g` number whose most significant digit is the first
/// letter.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    arity: usize,
    degree: usize,
    levels: Vec<Vec<C64>>,
}

impl SeriesTable {
    fn zero(arity: usize, degree: usize) -> Self {
        let levels = (0..=degree)
            .map(|k| vec![C64::new(0.0, 0.0); arity.pow(k as u32).max(1)])
            .collect();
        SeriesTable {
            arity,
            degree,
            levels,
        }
    }

    fn constant(arity: usize, degree: usize, z: C64) -> Self {
        let mut s = SeriesTable::zero(arity, degree);
        s.levels[0][0] = z;
        s
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn index(&self, word: &[usize]) -> Option<usize> {
        let mut idx = 0usize;
        for &j in word {
            if j == 0 || j > self.arity {
                return None;
            }
            idx = idx * self.arity + (j - 1);
        }
        Some(idx)
    }

    /// Coefficient of the word (1-based letters); zero beyond the degree.
    pub fn coeff(&self, word: &[usize]) -> C64 {
        if word.len() > self.degree {
            return C64::new(0.0, 0.0);
        }
        match self.index(word) {
            Some(i) => self.levels[word.len()][i],
            None => C64::new(0.0, 0.0),
        }
    }

    /// All words with coefficient modulus above `tol`, shortest first.
    pub fn nonzero(&self, tol: f64) -> Vec<(Vec<usize>, C64)> {
        let mut out = Vec::new();
        for (k, level) in self.levels.iter().enumerate() {
            for (i, &z) in level.iter().enumerate() {
                if z.norm() > tol {
                    out.push((decode(i, k, self.arity), z));
                }
            }
        }
        out
    }

    /// Every word of length at most `degree`, in storage order.
    pub fn words(arity: usize, degree: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for k in 0..=degree {
            let count = if arity == 0 && k > 0 {
                0
            } else {
                arity.pow(k as u32)
            };
            for i in 0..count {
                out.push(decode(i, k, arity));
            }
        }
        out
    }

    /// Evaluates the truncated series `Σ r_w X_w` at a matrix point.
    pub fn eval(&self, x: &MatTuple) -> MatC {
        let n = x.dim();
        let id = MatC::identity(n, n);
        let mut acc = &id * self.levels[0][0];
        // Depth-first over words, carrying the running product X_w.
        let mut stack: Vec<(usize, usize, MatC)> = vec![(0, 0, id)];
        while let Some((len, idx, prod)) = stack.pop() {
            if len == self.degree {
                continue;
            }
            for j in 0..self.arity {
                let p = &prod * x.get(j);
                let i = idx * self.arity + j;
                let z = self.levels[len + 1][i];
                if z != C64::new(0.0, 0.0) {
                    acc += &p * z;
                }
                stack.push((len + 1, i, p));
            }
        }
        acc
    }

    fn add(&self, other: &SeriesTable) -> SeriesTable {
        let mut out = self.clone();
        for (lo, li) in out.levels.iter_mut().zip(&other.levels) {
            for (a, b) in lo.iter_mut().zip(li) {
                *a += b;
            }
        }
        out
    }

    fn scale(&self, z: C64) -> SeriesTable {
        let mut out = self.clone();
        out.levels.iter_mut().flatten().for_each(|a| *a *= z);
        out
    }

    fn mul(&self, other: &SeriesTable) -> SeriesTable {
        let g = self.arity;
        let mut out = SeriesTable::zero(g, self.degree);
        for a in 0..=self.degree {
            for b in 0..=(self.degree - a) {
                let shift = g.pow(b as u32);
                let (la, lb) = (&self.levels[a], &other.levels[b]);
                let target = &mut out.levels[a + b];
                for (ia, &za) in la.iter().enumerate() {
                    if za == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let base = ia * shift;
                    for (ib, &zb) in lb.iter().enumerate() {
                        target[base + ib] += za * zb;
                    }
                }
            }
        }
        out
    }

    /// Series of the adjoint: words reversed, coefficients conjugated.
    fn adjoint(&self) -> SeriesTable {
        let mut out = SeriesTable::zero(self.arity, self.degree);
        for (k, level) in self.levels.iter().enumerate() {
            for (i, &z) in level.iter().enumerate() {
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut w = decode(i, k, self.arity);
                w.reverse();
                let j = out.index(&w).expect("valid word");
                out.levels[k][j] = z.conj();
            }
        }
        out
    }
}

fn decode(mut idx: usize, len: usize, arity: usize) -> Vec<usize> {
    let mut w = vec![0; len];
    for slot in w.iter_mut().rev() {
        *slot = idx % arity + 1;
        idx /= arity;
    }
    w
}

impl Serialize for SeriesTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            word: Vec<usize>,
            re: f64,
            im: f64,
        }
        #[derive(Serialize)]
        struct Table {
            arity: usize,
            degree: usize,
            coefficients: Vec<Entry>,
        }
        let coefficients = self
            .nonzero(0.0)
            .into_iter()
            .map(|(word, z)| Entry {
                word,
                re: z.re,
                im: z.im,
            })
            .collect();
        Table {
            arity: self.arity,
            degree: self.degree,
            coefficients,
        }
        .serialize(s)
    }
}

/// Power series of `r` truncated at total degree `degree`.
pub fn series_expand(r: &NcExpr, arity: usize, degree: usize) -> Result<SeriesTable> {
    r.check_arity(arity)?;
    let mut path = String::from("$");
    expand(r, arity, degree, &mut path)
}

/// `r(0)`, or [`Error::NotRegularAtZero`] if some inverse is taken of a
/// subexpression vanishing at zero.
pub fn value_at_zero(r: &NcExpr) -> Result<C64> {
    let mut path = String::from("$");
    Ok(expand(r, r.max_var(), 0, &mut path)?.levels[0][0])
}

fn expand(r: &NcExpr, g: usize, d: usize, path: &mut String) -> Result<SeriesTable> {
    let child = |e: &NcExpr, k: u8, path: &mut String| {
        let len = path.len();
        path.push('.');
        path.push(char::from(b'0' + k));
        let out = expand(e, g, d, path);
        path.truncate(len);
        out
    };
    match r {
        NcExpr::Const(z) => Ok(SeriesTable::constant(g, d, *z)),
        NcExpr::Var(j) => {
            let mut s = SeriesTable::zero(g, d);
            if d >= 1 {
                s.levels[1][j - 1] = C64::new(1.0, 0.0);
            }
            Ok(s)
        }
        NcExpr::Add(a, b) => Ok(child(a, 0, path)?.add(&child(b, 1, path)?)),
        NcExpr::Mul(a, b) => Ok(child(a, 0, path)?.mul(&child(b, 1, path)?)),
        NcExpr::Adj(a) => Ok(child(a, 0, path)?.adjoint()),
        NcExpr::Inv(a) => {
            let p = child(a, 0, path)?;
            let p0 = p.levels[0][0];
            if p0.norm() <= ZERO_TERM_TOL {
                return Err(Error::NotRegularAtZero { path: path.clone() });
            }
            // p = p0 - q with q(0) = 0, so y = p⁻¹ solves y = (1 + q y) / p0.
            let mut q = p.scale(C64::new(-1.0, 0.0));
            q.levels[0][0] = C64::new(0.0, 0.0);
            let inv_p0 = p0.inv();
            let mut y = SeriesTable::constant(g, d, inv_p0);
            for _ in 0..d {
                let mut next = q.mul(&y).scale(inv_p0);
                next.levels[0][0] += inv_p0;
                y = next;
            }
            Ok(y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncexpr::parse_expr;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn geometric_series() {
        let s = series_expand(&parse_expr("inv(1 - x1)", 1).unwrap(), 1, 3).unwrap();
        let nz = s.nonzero(1e-14);
        assert_eq!(nz.len(), 4);
        for (w, z) in nz {
            assert!(w.iter().all(|&j| j == 1));
            assert!((z - one()).norm() < 1e-15);
        }
    }

    #[test]
    fn push_through_pair_has_odd_alternating_words() {
        let s = series_expand(&parse_expr("x1*inv(1 - x2*x1)", 2).unwrap(), 2, 3).unwrap();
        let nz = s.nonzero(1e-14);
        let words: Vec<_> = nz.iter().map(|(w, _)| w.clone()).collect();
        assert_eq!(words, vec![vec![1], vec![1, 2, 1]]);
        assert!(nz.iter().all(|(_, z)| (*z - one()).norm() < 1e-15));
    }

    #[test]
    fn constant_series() {
        let s = series_expand(&NcExpr::real(5.0), 2, 2).unwrap();
        assert_eq!(s.nonzero(0.0), vec![(vec![], C64::new(5.0, 0.0))]);
    }

    #[test]
    fn not_regular_at_zero() {
        let err = series_expand(&parse_expr("1 + inv(x1)", 1).unwrap(), 1, 2).unwrap_err();
        assert_eq!(err, Error::NotRegularAtZero { path: "$.1".into() });
        assert!(value_at_zero(&parse_expr("inv(2 + x1)", 1).unwrap()).is_ok());
    }

    #[test]
    fn adjoint_reverses_words() {
        let s = series_expand(&parse_expr("adj((2+1i)*x1*x2)", 2).unwrap(), 2, 2).unwrap();
        assert_eq!(s.coeff(&[2, 1]), C64::new(2.0, -1.0));
        assert_eq!(s.coeff(&[1, 2]), C64::new(0.0, 0.0));
    }
}
