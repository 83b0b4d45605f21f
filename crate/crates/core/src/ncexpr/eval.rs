use super::{MatNcExpr, MatTuple, NcExpr};
use crate::error::{Error, Result};
use crate::linalg::{self, MatC};

/// Evaluates `r` at the matrix point `x`.
///
/// Constants become scalar multiples of the identity. `adj(s)` evaluates to
/// `s(X*)*`. An inverse whose argument fails the invertibility test yields
/// [`Error::Domain`] with the path of the failing node (`$` is the root,
/// `.k` descends into the k-th child).
pub fn eval_expr(r: &NcExpr, x: &MatTuple) -> Result<MatC> {
    r.check_arity(x.arity())?;
    let xa = contains_adj(r).then(|| x.adjoint());
    let mut path = String::from("$");
    Eval { x, xa: xa.as_ref() }.go(r, false, &mut path)
}

/// Block matrix whose `(i, j)` block is `eval_expr(ur[i][j], x)`.
pub fn eval_mat_expr(ur: &MatNcExpr, x: &MatTuple) -> Result<MatC> {
    let n = x.dim();
    let mut out = MatC::zeros(ur.rows() * n, ur.cols() * n);
    for i in 0..ur.rows() {
        for j in 0..ur.cols() {
            let block = eval_expr(ur.get(i, j), x).map_err(|e| match e {
                Error::Domain { path } => Error::Domain {
                    path: format!("[{i},{j}]{path}"),
                },
                other => other,
            })?;
            out.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    Ok(out)
}

fn contains_adj(r: &NcExpr) -> bool {
    match r {
        NcExpr::Const(_) | NcExpr::Var(_) => false,
        NcExpr::Add(a, b) | NcExpr::Mul(a, b) => contains_adj(a) || contains_adj(b),
        NcExpr::Inv(a) => contains_adj(a),
        NcExpr::Adj(_) => true,
    }
}

struct Eval<'a> {
    x: &'a MatTuple,
    xa: Option<&'a MatTuple>,
}

impl Eval<'_> {
    /// `starred` means "evaluate at X* instead of X".
    fn go(&self, r: &NcExpr, starred: bool, path: &mut String) -> Result<MatC> {
        let n = self.x.dim();
        match r {
            NcExpr::Const(z) => Ok(MatC::identity(n, n) * *z),
            NcExpr::Var(j) => {
                let t = if starred {
                    self.xa.expect("adjoint tuple")
                } else {
                    self.x
                };
                Ok(t.get(j - 1).clone())
            }
            NcExpr::Add(a, b) => {
                let va = self.child(a, 0, starred, path)?;
                let vb = self.child(b, 1, starred, path)?;
                Ok(va + vb)
            }
            NcExpr::Mul(a, b) => {
                let va = self.child(a, 0, starred, path)?;
                let vb = self.child(b, 1, starred, path)?;
                Ok(linalg::matmul(&va, &vb))
            }
            NcExpr::Inv(a) => {
                let va = self.child(a, 0, starred, path)?;
                linalg::domain_inverse(&va).ok_or_else(|| Error::Domain { path: path.clone() })
            }
            NcExpr::Adj(a) => Ok(self.child(a, 0, !starred, path)?.adjoint()),
        }
    }

    fn child(&self, r: &NcExpr, k: usize, starred: bool, path: &mut String) -> Result<MatC> {
        let len = path.len();
        path.push('.');
        path.push(char::from(b'0' + k as u8));
        let out = self.go(r, starred, path);
        path.truncate(len);
        out
    }
}
