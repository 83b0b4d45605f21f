//! Descriptor realizations `D + C(J − L_A(x))⁻¹B`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    self, block2, hstack, max_norm, orthogonal_complement, orthonormal_range, zeros, MatC, C64,
};
use crate::linrep::LinearPencil;
use crate::ncexpr::MatTuple;

const SIGNATURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub d: MatC,
    pub c: MatC,
    pub j: MatC,
    pub a: Vec<MatC>,
    pub b: MatC,
}

impl Realization {
    /// Validates shapes and the signature condition `J = J*`, `J² = I`.
    pub fn new(d: MatC, c: MatC, j: MatC, a: Vec<MatC>, b: MatC) -> Result<Self> {
        let n = j.nrows();
        let (d1, d2) = d.shape();
        let shapes_ok = j.is_square()
            && c.shape() == (d1, n)
            && b.shape() == (n, d2)
            && a.iter().all(|m| m.shape() == (n, n));
        if !shapes_ok {
            return Err(Error::ShapeMismatch(format!(
                "realization D {:?}, C {:?}, J {:?}, B {:?}",
                d.shape(),
                c.shape(),
                j.shape(),
                b.shape()
            )));
        }
        let dev = linalg::hermitian_defect(&j).max(max_norm(&(&j * &j - MatC::identity(n, n))));
        if dev > SIGNATURE_TOL {
            return Err(Error::NotSignature { deviation: dev });
        }
        Ok(Realization { d, c, j, a, b })
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn arity(&self) -> usize {
        self.a.len()
    }

    pub fn is_monic(&self) -> bool {
        max_norm(&(&self.j - MatC::identity(self.dim(), self.dim()))) <= SIGNATURE_TOL
    }

    /// `D = D*`, `B = C*`, `A_j = A_j*` (and `J` is a signature matrix by
    /// construction).
    pub fn is_selfadjoint(&self, tol: f64) -> bool {
        self.d.is_square()
            && linalg::hermitian_defect(&self.d) <= tol
            && max_norm(&(&self.b - self.c.adjoint())) <= tol
            && self.a.iter().all(|m| linalg::hermitian_defect(m) <= tol)
    }

    fn monic_parts(&self) -> (Vec<MatC>, MatC) {
        (
            self.a.iter().map(|m| &self.j * m).collect(),
            &self.j * &self.b,
        )
    }
}

/// `(D, C, I, JA₁, …, JA_g, JB)`.
pub fn monic_form(r: &Realization) -> Realization {
    let (a, b) = r.monic_parts();
    let n = r.dim();
    Realization {
        d: r.d.clone(),
        c: r.c.clone(),
        j: MatC::identity(n, n),
        a,
        b,
    }
}

/// Sys matrix `[[J − L_A(x), B], [C, −D]]`.
pub fn sys_matrix(r: &Realization) -> LinearPencil {
    let (d1, d2) = r.d.shape();
    let n = r.dim();
    let mut coeffs = vec![block2(&r.j, &r.b, &r.c, &(-r.d.clone()))];
    for m in &r.a {
        coeffs.push(block2(
            &(-m.clone()),
            &zeros(n, d2),
            &zeros(d1, n),
            &zeros(d1, d2),
        ));
    }
    LinearPencil::new(coeffs).expect("consistent blocks")
}

/// Smallest subspace containing the columns of `start` and invariant under
/// every matrix in `ops`, as an orthonormal basis.
fn krylov(ops: &[MatC], start: &MatC, n: usize) -> MatC {
    let mut basis = orthonormal_range(start, 0.0);
    for _ in 0..=n {
        if basis.ncols() == n || basis.ncols() == 0 {
            break;
        }
        let mut cols = basis.clone();
        for a in ops {
            cols = hstack(&cols, &(a * &basis));
        }
        let next = orthonormal_range(&cols, 1.0);
        if next.ncols() == basis.ncols() {
            break;
        }
        basis = next;
    }
    basis
}

/// Orthonormal basis of the span of all `(JA)^w JB` columns.
pub fn controllable_space(r: &Realization) -> MatC {
    let (a, b) = r.monic_parts();
    krylov(&a, &b, r.dim())
}

/// Orthonormal basis of `{v : C(JA)^w v = 0 for all words w}`.
pub fn unobservable_space(r: &Realization) -> MatC {
    let n = r.dim();
    let observable = observable_space(r);
    orthogonal_complement(&observable, n)
}

fn observable_space(r: &Realization) -> MatC {
    let (a, _) = r.monic_parts();
    let a_adj: Vec<MatC> = a.iter().map(|m| m.adjoint()).collect();
    krylov(&a_adj, &r.c.adjoint(), r.dim())
}

/// Kalman cut-down: restriction to the controllable space followed by the
/// quotient by the unobservable space. The result is monic and minimal.
pub fn cut_down(r: &Realization) -> Realization {
    let m = monic_form(r);
    let v = controllable_space(&m);
    let restricted = Realization {
        d: m.d.clone(),
        c: &m.c * &v,
        j: MatC::identity(v.ncols(), v.ncols()),
        a: m.a.iter().map(|a| v.adjoint() * a * &v).collect(),
        b: v.adjoint() * &m.b,
    };
    let o = observable_space(&restricted);
    Realization {
        d: restricted.d.clone(),
        c: &restricted.c * &o,
        j: MatC::identity(o.ncols(), o.ncols()),
        a: restricted.a.iter().map(|a| o.adjoint() * a * &o).collect(),
        b: o.adjoint() * &restricted.b,
    }
}

/// Minimal realization of a selfadjoint realization that stays selfadjoint.
///
/// With `S` the controllable space, the unobservable space is the
/// `J`-orthogonal complement of `S`, so the Hermitian form `⟨Js, s'⟩`
/// restricted to `S` has exactly `S ∩ N` as its kernel. Diagonalizing that
/// form and rescaling its nonzero part gives a basis `T` with `T*JT` a
/// signature matrix; the compressed data `(T*JT, T*A_jT, T*B)` realize the
/// same function.
pub fn symmetric_cut_down(r: &Realization) -> Result<Realization> {
    if !r.is_selfadjoint(1e-10 * (1.0 + max_norm(&r.b))) {
        return Err(Error::InvalidRealization(
            "symmetric cut-down needs a selfadjoint realization".into(),
        ));
    }
    let v = controllable_space(r);
    let gram = v.adjoint() * &r.j * &v;
    let gram = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    let (vals, w) = linalg::hermitian_eig(&gram)?;
    let top = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i].abs() > 1e-10 * top.max(f64::MIN_POSITIVE))
        .collect();
    let mut t = zeros(r.dim(), keep.len());
    let mut signs = Vec::with_capacity(keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let col = &v * w.column(i) / C64::new(vals[i].abs().sqrt(), 0.0);
        t.set_column(k, &col);
        signs.push(C64::new(vals[i].signum(), 0.0));
    }
    let j = MatC::from_diagonal(&DVector::from_vec(signs));
    let a = r.a.iter().map(|m| {
        let x = t.adjoint() * m * &t;
        (&x + x.adjoint()) * C64::new(0.5, 0.0)
    });
    let b = t.adjoint() * &r.b;
    Realization::new(r.d.clone(), b.adjoint(), j, a.collect(), b)
}

/// Coefficient of the word `w` (1-based letters) in the power series of the
/// realization: `D + CJB` for the empty word and
/// `C·JA_{w₁}···JA_{w_k}·JB` otherwise.
pub fn realization_series_coeff(r: &Realization, w: &[usize]) -> MatC {
    let (a, b) = r.monic_parts();
    let mut acc = b;
    for &letter in w.iter().rev() {
        acc = &a[letter - 1] * acc;
    }
    let out = &r.c * acc;
    if w.is_empty() {
        out + &r.d
    } else {
        out
    }
}

/// `D ⊗ I + (C ⊗ I)(J ⊗ I − Σ A_j ⊗ X_j)⁻¹(B ⊗ I)`.
pub fn eval_realization(r: &Realization, x: &MatTuple) -> Result<MatC> {
    if x.arity() < r.arity() {
        return Err(Error::ShapeMismatch(
            "tuple arity below realization arity".into(),
        ));
    }
    let n = x.dim();
    let id = MatC::identity(n, n);
    let s = r.dim();
    let mut res = zeros(s * n, s * n);
    linalg::add_kron_into(&mut res, &r.j, &id);
    for (k, a) in r.a.iter().enumerate() {
        linalg::add_kron_into(&mut res, &(-a.clone()), x.get(k));
    }
    let inv = linalg::domain_inverse(&res).ok_or_else(|| Error::Domain {
        path: "resolvent".into(),
    })?;
    Ok(r.d.kronecker(&id) + r.c.kronecker(&id) * inv * r.b.kronecker(&id))
}

/// Residuals of the intertwining relations `SA_j = ÃS`, `SB = B̃`, `C = C̃S`.
pub fn similarity_residual(r1: &Realization, r2: &Realization, s: &MatC) -> f64 {
    let mut worst = max_norm(&(s * &r1.b - &r2.b)).max(max_norm(&(&r1.c - &r2.c * s)));
    for (a1, a2) in r1.a.iter().zip(&r2.a) {
        worst = worst.max(max_norm(&(s * a1 - a2 * s)));
    }
    worst
}

/// Similarity `S` between two minimal monic realizations of the same
/// function, obtained by least squares on the vectorized intertwining
/// relations. `None` if no invertible solution satisfies them to `1e-8`
/// (relative to the data).
pub fn check_similarity(r1: &Realization, r2: &Realization) -> Result<Option<MatC>> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch {
            left: r1.dim(),
            right: r2.dim(),
        });
    }
    if r1.d.shape() != r2.d.shape() || r1.arity() != r2.arity() {
        return Err(Error::ShapeMismatch(
            "realizations of different shapes".into(),
        ));
    }
    let (m1, m2) = (monic_form(r1), monic_form(r2));
    let n = m1.dim();
    if n == 0 {
        return Ok(Some(MatC::zeros(0, 0)));
    }
    let id = MatC::identity(n, n);
    // Column-major vec: vec(SA) = (Aᵀ ⊗ I) vec S, vec(ÃS) = (I ⊗ Ã) vec S.
    let mut blocks: Vec<(MatC, DVector<C64>)> = Vec::new();
    for (a1, a2) in m1.a.iter().zip(&m2.a) {
        blocks.push((
            a1.transpose().kronecker(&id) - id.kronecker(a2),
            DVector::zeros(n * n),
        ));
    }
    blocks.push((
        m1.b.transpose().kronecker(&id),
        DVector::from_column_slice(m2.b.as_slice()),
    ));
    blocks.push((
        MatC::identity(n, n).kronecker(&m2.c),
        DVector::from_column_slice(m1.c.as_slice()),
    ));
    let rows: usize = blocks.iter().map(|(m, _)| m.nrows()).sum();
    let mut big = zeros(rows, n * n);
    let mut rhs = DVector::zeros(rows);
    let mut at = 0;
    for (m, v) in &blocks {
        big.view_mut((at, 0), m.shape()).copy_from(m);
        rhs.rows_mut(at, v.len()).copy_from(v);
        at += m.nrows();
    }
    let Some(sol) = linalg::lstsq(&big, &rhs) else {
        return Ok(None);
    };
    let s = MatC::from_column_slice(n, n, sol.as_slice());
    let scale =
        1.0 + max_norm(&m1.b) + max_norm(&m1.c) + m1.a.iter().map(max_norm).fold(0.0, f64::max);
    if similarity_residual(&m1, &m2, &s) <= 1e-8 * scale * (1.0 + max_norm(&s))
        && linalg::is_invertible(&s)
    {
        Ok(Some(s))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_matrix};

    fn descriptor_example() -> Realization {
        Realization::new(
            real_matrix(1, 1, &[0.0]),
            real_matrix(1, 2, &[1.0, 0.0]),
            MatC::identity(2, 2),
            vec![
                MatC::identity(2, 2),
                real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            ],
            real_matrix(2, 1, &[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn value_at_origin() {
        let r = descriptor_example();
        let v = eval_realization(&r, &MatTuple::zeros(2, 1)).unwrap();
        assert!((v[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(realization_series_coeff(&r, &[])[(0, 0)], c(1.0, 0.0));
        assert_eq!(realization_series_coeff(&r, &[1])[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn singular_resolvent_is_a_domain_error() {
        let r = descriptor_example();
        // X1 = 1 makes the diagonal of the resolvent vanish.
        let x = MatTuple::scalars(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            eval_realization(&r, &x),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn monic_form_flips_signs() {
        let r = Realization::new(
            zeros(1, 1),
            real_matrix(1, 2, &[1.0, 1.0]),
            real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            vec![MatC::identity(2, 2)],
            real_matrix(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let m = monic_form(&r);
        assert_eq!(m.a[0], real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(monic_form(&m), m);
    }

    #[test]
    fn sys_matrix_shape() {
        let p = sys_matrix(&descriptor_example());
        assert_eq!((p.rows(), p.cols()), (3, 3));
        assert_eq!(p.coeff(0)[(2, 0)], c(1.0, 0.0));
    }

    #[test]
    fn trivial_spaces() {
        let mut r = descriptor_example();
        r.b = zeros(2, 1);
        assert_eq!(controllable_space(&r).ncols(), 0);
        r.c = zeros(1, 2);
        assert_eq!(unobservable_space(&r).ncols(), 2);
    }

    #[test]
    fn padded_state_is_removed() {
        let r = descriptor_example();
        let pad = |m: &MatC, x: f64| {
            let mut out = linalg::block_diag(m, &real_matrix(1, 1, &[x]));
            out[(0, 2)] = c(0.5, 0.0);
            out
        };
        let padded = Realization::new(
            r.d.clone(),
            hstack(&r.c, &real_matrix(1, 1, &[3.0])),
            MatC::identity(3, 3),
            vec![pad(&r.a[0], 2.0), pad(&r.a[1], -1.0)],
            linalg::vstack(&r.b, &zeros(1, 1)),
        )
        .unwrap();
        let cut = cut_down(&padded);
        assert_eq!(cut.dim(), 2);
        for w in [vec![], vec![1], vec![2, 1], vec![1, 2, 2]] {
            let e = realization_series_coeff(&padded, &w) - realization_series_coeff(&cut, &w);
            assert!(max_norm(&e) < 1e-12);
        }
        let s = check_similarity(&cut, &cut).unwrap().unwrap();
        assert!(max_norm(&(s - MatC::identity(2, 2))) < 1e-8);
    }

    #[test]
    fn signature_is_enforced() {
        let err = Realization::new(
            zeros(1, 1),
            zeros(1, 1),
            real_matrix(1, 1, &[2.0]),
            vec![],
            zeros(1, 1),
        );
        assert!(matches!(err, Err(Error::NotSignature { .. })));
    }
}
