//! Linear pencils and formal linear representations (FLRs).
//!
//! An FLR `ρ = (u, Q, v)` of `r` satisfies `r(X) = −u Q(X)⁻¹ v` wherever `r`
//! is defined, with `Q` an affine pencil. [`build_flr`] constructs one by
//! recursion over the expression tree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, block2, hstack, max_norm, vstack, zeros, MatC, C64, ONE, ZERO};
use crate::ncexpr::{eval_expr, random_tuple, MatNcExpr, MatTuple, NcExpr};
use crate::realization::Realization;

/// `Q(x) = Q⁽⁰⁾ + Σ_j Q⁽ʲ⁾ x_j` with `n × m` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPencil {
    coeffs: Vec<MatC>,
}

impl LinearPencil {
    /// `coeffs[0]` is the constant term; `coeffs.len() - 1` is the arity.
    pub fn new(coeffs: Vec<MatC>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::ShapeMismatch("pencil without coefficients".into()))?;
        let shape = first.shape();
        if coeffs.iter().any(|q| q.shape() != shape) {
            return Err(Error::ShapeMismatch(
                "pencil coefficients differ in shape".into(),
            ));
        }
        if coeffs.iter().any(|q| !linalg::is_finite(q)) {
            return Err(Error::NonFinite);
        }
        Ok(LinearPencil { coeffs })
    }

    pub fn zero(rows: usize, cols: usize, arity: usize) -> Self {
        LinearPencil {
            coeffs: vec![zeros(rows, cols); arity + 1],
        }
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn coeff(&self, j: usize) -> &MatC {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[MatC] {
        &self.coeffs
    }

    /// Applies `f` to every coefficient.
    pub fn map(&self, f: impl Fn(usize, &MatC) -> MatC) -> LinearPencil {
        LinearPencil {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, q)| f(j, q))
                .collect(),
        }
    }

    /// Coefficientwise conjugate transpose.
    pub fn adjoint(&self) -> LinearPencil {
        self.map(|_, q| q.adjoint())
    }

    /// Same pencil viewed in `arity` variables (zero-padded).
    pub fn with_arity(&self, arity: usize) -> LinearPencil {
        assert!(arity >= self.arity(), "cannot drop variables from a pencil");
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(arity + 1, zeros(self.rows(), self.cols()));
        LinearPencil { coeffs }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows() == self.cols()
            && self
                .coeffs
                .iter()
                .all(|q| linalg::hermitian_defect(q) <= tol)
    }

    /// `Q⁽⁰⁾ ⊗ I_n + Σ Q⁽ʲ⁾ ⊗ X_j`.
    pub fn eval(&self, x: &MatTuple) -> Result<MatC> {
        if x.arity() < self.arity() {
            return Err(Error::ShapeMismatch(format!(
                "pencil in {} variables evaluated at a {}-tuple",
                self.arity(),
                x.arity()
            )));
        }
        let n = x.dim();
        let mut out = zeros(self.rows() * n, self.cols() * n);
        linalg::add_kron_into(&mut out, &self.coeffs[0], &MatC::identity(n, n));
        for (j, q) in self.coeffs.iter().enumerate().skip(1) {
            linalg::add_kron_into(&mut out, q, x.get(j - 1));
        }
        Ok(out)
    }

    /// Evaluation at a point of scalars.
    pub fn eval_scalar(&self, x: &[C64]) -> MatC {
        let mut out = self.coeffs[0].clone();
        for (j, q) in self.coeffs.iter().enumerate().skip(1) {
            out += q * x[j - 1];
        }
        out
    }

    fn select(&self, rows: &[usize], cols: &[usize]) -> LinearPencil {
        self.map(|_, q| q.select_rows(rows).select_columns(cols))
    }

    fn block_diag(&self, other: &LinearPencil) -> LinearPencil {
        let g = self.arity().max(other.arity());
        let (a, b) = (self.with_arity(g), other.with_arity(g));
        LinearPencil {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| linalg::block_diag(x, y))
                .collect(),
        }
    }
}

/// Formal linear representation `(u, Q, v)`: `u` is `d₁ × n`, `Q` is
/// `n × n`, `v` is `n × d₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flr {
    pub u: MatC,
    pub q: LinearPencil,
    pub v: MatC,
}

impl Flr {
    pub fn new(u: MatC, q: LinearPencil, v: MatC) -> Result<Self> {
        let n = q.rows();
        if q.cols() != n || u.ncols() != n || v.nrows() != n {
            return Err(Error::ShapeMismatch(format!(
                "u {:?}, Q {}x{}, v {:?}",
                u.shape(),
                q.rows(),
                q.cols(),
                v.shape()
            )));
        }
        Ok(Flr { u, q, v })
    }

    /// Pencil size `n`.
    pub fn size(&self) -> usize {
        self.q.rows()
    }

    pub fn arity(&self) -> usize {
        self.q.arity()
    }

    /// Value shape `(d₁, d₂)`.
    pub fn value_shape(&self) -> (usize, usize) {
        (self.u.nrows(), self.v.ncols())
    }

    /// `−(u ⊗ I) Q(X)⁻¹ (v ⊗ I)`.
    pub fn eval(&self, x: &MatTuple) -> Result<MatC> {
        let n = x.dim();
        let qx = self.q.eval(x)?;
        let qinv = linalg::domain_inverse(&qx).ok_or_else(|| Error::Domain {
            path: "Q(X)".into(),
        })?;
        let id = MatC::identity(n, n);
        let uk = self.u.kronecker(&id);
        let vk = self.v.kronecker(&id);
        Ok(-(uk * qinv * vk))
    }
}

/// Selfadjoint formal linear representation `(Q, v)`:
/// `r(X) = −v* Q(X)⁻¹ v` with Hermitian coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SaFlr {
    pub q: LinearPencil,
    pub v: MatC,
}

impl SaFlr {
    pub fn new(q: LinearPencil, v: MatC) -> Result<Self> {
        if q.rows() != q.cols() || v.nrows() != q.rows() {
            return Err(Error::ShapeMismatch("selfadjoint representation".into()));
        }
        let scale = q.coeffs().iter().map(max_norm).fold(1.0, f64::max);
        if !q.is_hermitian(1e-12 * scale) {
            return Err(Error::NotHermitian {
                deviation: q
                    .coeffs()
                    .iter()
                    .map(linalg::hermitian_defect)
                    .fold(0.0, f64::max),
            });
        }
        Ok(SaFlr { q, v })
    }

    pub fn size(&self) -> usize {
        self.q.rows()
    }

    pub fn arity(&self) -> usize {
        self.q.arity()
    }

    pub fn eval(&self, x: &MatTuple) -> Result<MatC> {
        let flr = Flr {
            u: self.v.adjoint(),
            q: self.q.clone(),
            v: self.v.clone(),
        };
        flr.eval(x)
    }
}

/// FLR of the affine function `λ₀ + Σ λ_j x_j`:
/// `u = (0 1)`, `Q = [[λ(x), −1], [−1, 0]]`, `v = (0 1)ᵀ`.
pub fn flr_affine(lambda: &[C64]) -> Flr {
    assert!(
        !lambda.is_empty(),
        "affine coefficients need a constant term"
    );
    let coeffs = lambda
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mut q = zeros(2, 2);
            q[(0, 0)] = l;
            if j == 0 {
                q[(0, 1)] = -ONE;
                q[(1, 0)] = -ONE;
            }
            q
        })
        .collect();
    let u = MatC::from_row_slice(1, 2, &[ZERO, ONE]);
    let v = MatC::from_row_slice(2, 1, &[ZERO, ONE]);
    Flr {
        u,
        q: LinearPencil { coeffs },
        v,
    }
}

/// FLR of `r₁ + r₂` (block diagonal).
pub fn flr_add(a: &Flr, b: &Flr) -> Result<Flr> {
    if a.value_shape() != b.value_shape() {
        return Err(Error::ShapeMismatch(format!(
            "adding values of shape {:?} and {:?}",
            a.value_shape(),
            b.value_shape()
        )));
    }
    Ok(Flr {
        u: hstack(&a.u, &b.u),
        q: a.q.block_diag(&b.q),
        v: vstack(&a.v, &b.v),
    })
}

/// FLR of `r₁ · r₂`: `u = (0 u₁)`, `Q = [[v₁u₂, Q₁], [Q₂, 0]]`, `v = (0; v₂)`.
pub fn flr_mul(a: &Flr, b: &Flr) -> Result<Flr> {
    let (d1, k1) = a.value_shape();
    let (k2, d2) = b.value_shape();
    if k1 != k2 {
        return Err(Error::ShapeMismatch(format!(
            "multiplying {d1}x{k1} by {k2}x{d2}"
        )));
    }
    let (n1, n2) = (a.size(), b.size());
    let g = a.arity().max(b.arity());
    let (qa, qb) = (a.q.with_arity(g), b.q.with_arity(g));
    let vu = &a.v * &b.u;
    let coeffs = (0..=g)
        .map(|j| {
            let corner = if j == 0 { vu.clone() } else { zeros(n1, n2) };
            block2(&corner, qa.coeff(j), qb.coeff(j), &zeros(n2, n1))
        })
        .collect();
    let u = hstack(&zeros(d1, n2), &a.u);
    let v = vstack(&zeros(n1, d2), &b.v);
    Ok(Flr {
        u,
        q: LinearPencil { coeffs },
        v,
    })
}

/// FLR of `r⁻¹`: `u = (I 0)`, `Q = [[0, u], [v, −Q]]`, `v = (I; 0)`.
pub fn flr_inv(a: &Flr) -> Result<Flr> {
    let (d1, d2) = a.value_shape();
    if d1 != d2 {
        return Err(Error::ShapeMismatch(format!("inverting a {d1}x{d2} value")));
    }
    let (d, n) = (d1, a.size());
    let coeffs =
        a.q.coeffs()
            .iter()
            .enumerate()
            .map(|(j, q)| {
                if j == 0 {
                    block2(&zeros(d, d), &a.u, &a.v, &(-q))
                } else {
                    block2(&zeros(d, d), &zeros(d, n), &zeros(n, d), &(-q))
                }
            })
            .collect();
    let id = MatC::identity(d, d);
    Ok(Flr {
        u: hstack(&id, &zeros(d, n)),
        q: LinearPencil { coeffs },
        v: vstack(&id, &zeros(n, d)),
    })
}

/// FLR of `r*`: `(v*, Q*, u*)`.
pub fn flr_adjoint(a: &Flr) -> Flr {
    Flr {
        u: a.v.adjoint(),
        q: a.q.adjoint(),
        v: a.u.adjoint(),
    }
}

/// Options for [`build_flr_with`].
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Represent affine subexpressions by a single size-2 block and fold
    /// scalar factors into `u` or `v`.
    pub collapse_affine: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            collapse_affine: true,
        }
    }
}

/// Coefficients `(λ₀, …, λ_g)` if `r` is an affine function defined
/// everywhere.
pub fn affine_coeffs(r: &NcExpr, arity: usize) -> Option<Vec<C64>> {
    let mut out = vec![ZERO; arity + 1];
    match r {
        NcExpr::Const(z) => out[0] = *z,
        NcExpr::Var(j) => out[*j] = ONE,
        NcExpr::Add(a, b) => {
            let (la, lb) = (affine_coeffs(a, arity)?, affine_coeffs(b, arity)?);
            out.iter_mut()
                .zip(la.iter().zip(&lb))
                .for_each(|(o, (x, y))| *o = x + y);
        }
        NcExpr::Mul(a, b) => {
            let (la, lb) = (affine_coeffs(a, arity)?, affine_coeffs(b, arity)?);
            if la[1..].iter().all(|z| *z == ZERO) {
                out.iter_mut().zip(&lb).for_each(|(o, y)| *o = la[0] * y);
            } else if lb[1..].iter().all(|z| *z == ZERO) {
                out.iter_mut().zip(&la).for_each(|(o, x)| *o = x * lb[0]);
            } else {
                return None;
            }
        }
        NcExpr::Inv(a) => {
            let la = affine_coeffs(a, arity)?;
            if la[1..].iter().any(|z| *z != ZERO) || la[0] == ZERO {
                return None;
            }
            out[0] = la[0].inv();
        }
        NcExpr::Adj(a) => {
            out = affine_coeffs(a, arity)?.iter().map(|z| z.conj()).collect();
        }
    }
    Some(out)
}

fn scalar_value(r: &NcExpr, arity: usize) -> Option<C64> {
    affine_coeffs(r, arity)
        .filter(|l| l[1..].iter().all(|z| *z == ZERO))
        .map(|l| l[0])
}

/// FLR of a scalar expression in `arity` variables.
pub fn build_flr(r: &NcExpr, arity: usize) -> Result<Flr> {
    build_flr_with(r, arity, BuildOptions::default())
}

pub fn build_flr_with(r: &NcExpr, arity: usize, opts: BuildOptions) -> Result<Flr> {
    r.check_arity(arity)?;
    Ok(build(r, arity, opts))
}

fn build(r: &NcExpr, g: usize, opts: BuildOptions) -> Flr {
    if opts.collapse_affine {
        if let Some(l) = affine_coeffs(r, g) {
            return flr_affine(&l);
        }
    }
    let ok = "scalar representations compose";
    match r {
        NcExpr::Const(z) => {
            let mut l = vec![ZERO; g + 1];
            l[0] = *z;
            flr_affine(&l)
        }
        NcExpr::Var(j) => {
            let mut l = vec![ZERO; g + 1];
            l[*j] = ONE;
            flr_affine(&l)
        }
        NcExpr::Add(a, b) => flr_add(&build(a, g, opts), &build(b, g, opts)).expect(ok),
        NcExpr::Mul(a, b) => {
            if opts.collapse_affine {
                if let Some(c) = scalar_value(a, g) {
                    let mut f = build(b, g, opts);
                    f.u *= c;
                    return f;
                }
                if let Some(c) = scalar_value(b, g) {
                    let mut f = build(a, g, opts);
                    f.v *= c;
                    return f;
                }
            }
            flr_mul(&build(a, g, opts), &build(b, g, opts)).expect(ok)
        }
        NcExpr::Inv(a) => flr_inv(&build(a, g, opts)).expect(ok),
        NcExpr::Adj(a) => flr_adjoint(&build(a, g, opts)),
    }
}

/// FLR of a matrix of expressions, assembled as `Σ E_ij r_ij`.
pub fn build_flr_mat(ur: &MatNcExpr, arity: usize) -> Result<Flr> {
    let (d1, d2) = (ur.rows(), ur.cols());
    let mut acc: Option<Flr> = None;
    for i in 0..d1 {
        for j in 0..d2 {
            let f = build_flr(ur.get(i, j), arity)?;
            let n = f.size();
            let mut u = zeros(d1, n);
            u.set_row(i, &f.u.row(0));
            let mut v = zeros(n, d2);
            v.set_column(j, &f.v.column(0));
            let term = Flr {
                u,
                q: f.q.with_arity(arity),
                v,
            };
            acc = Some(match acc {
                None => term,
                Some(prev) => flr_add(&prev, &term)?,
            });
        }
    }
    Ok(acc.expect("nonempty matrix"))
}

/// Selfadjoint doubling `Q̂ = [[0, Q*], [Q, 0]]`, `v̂ = (½u*; v)`, which
/// represents `½(r + r*)` on Hermitian points.
///
/// With `normalize_q0` the representation is first rewritten as
/// `(u, Q⁽⁰⁾⁻¹Q, Q⁽⁰⁾⁻¹v)`, so that the doubled constant coefficient is the
/// signature `[[0, I], [I, 0]]`.
pub fn make_selfadjoint_flr(rho: &Flr, normalize_q0: bool) -> Result<SaFlr> {
    let (d1, d2) = rho.value_shape();
    if d1 != d2 {
        return Err(Error::ShapeMismatch(format!(
            "selfadjoint representation of a {d1}x{d2} value"
        )));
    }
    let (q, v) = if normalize_q0 {
        let q0inv = linalg::checked_inverse(rho.q.coeff(0)).ok_or(Error::SingularQ0)?;
        let q = rho.q.map(|j, c| {
            if j == 0 {
                MatC::identity(c.nrows(), c.ncols())
            } else {
                &q0inv * c
            }
        });
        (q, &q0inv * &rho.v)
    } else {
        (rho.q.clone(), rho.v.clone())
    };
    let n = q.rows();
    let doubled = q.map(|_, c| block2(&zeros(n, n), &c.adjoint(), c, &zeros(n, n)));
    let vh = vstack(&(rho.u.adjoint() * C64::new(0.5, 0.0)), &v);
    Ok(SaFlr { q: doubled, v: vh })
}

/// Selfadjoint representation of `[[0, r], [r*, 0]]`:
/// `Q̂ = [[0, Q], [Q*, 0]]`, `v̂ = [[0, v], [u*, 0]]`.
pub fn hermitize_flr(rho: &Flr) -> SaFlr {
    let n = rho.size();
    let (d1, d2) = rho.value_shape();
    let q = rho
        .q
        .map(|_, c| block2(&zeros(n, n), c, &c.adjoint(), &zeros(n, n)));
    let v = block2(&zeros(n, d1), &rho.v, &rho.u.adjoint(), &zeros(n, d2));
    SaFlr { q, v }
}

/// Monic realization `D + C(I − L_A(x))⁻¹B` from an FLR of `r − D`:
/// `C = −u`, `B = Q⁽⁰⁾⁻¹v`, `A_j = −Q⁽⁰⁾⁻¹Q⁽ʲ⁾`.
pub fn flr_to_realization(rho: &Flr, d: &MatC) -> Result<Realization> {
    if d.shape() != rho.value_shape() {
        return Err(Error::ShapeMismatch("feed-through shape".into()));
    }
    let q0inv = linalg::checked_inverse(rho.q.coeff(0)).ok_or(Error::SingularQ0)?;
    let a = rho.q.coeffs()[1..].iter().map(|q| -(&q0inv * q)).collect();
    let n = rho.size();
    Realization::new(
        d.clone(),
        -rho.u.clone(),
        MatC::identity(n, n),
        a,
        &q0inv * &rho.v,
    )
}

/// FLR of the constant matrix `c`: `u = I`, `Q = −I`, `v = c`.
pub fn flr_constant(c: &MatC, arity: usize) -> Flr {
    let d = c.nrows();
    let mut coeffs = vec![MatC::zeros(d, d); arity + 1];
    coeffs[0] = -MatC::identity(d, d);
    Flr {
        u: MatC::identity(d, d),
        q: LinearPencil::new(coeffs).expect("square coefficients"),
        v: c.clone(),
    }
}

/// Monic realization of the function represented by `rho`, with
/// feed-through `D = −uQ⁽⁰⁾⁻¹v` (the value at zero).
pub fn realize_regular(rho: &Flr) -> Result<Realization> {
    let q0inv = linalg::checked_inverse(rho.q.coeff(0)).ok_or(Error::SingularQ0)?;
    let d = -(&rho.u * q0inv * &rho.v);
    let shifted = prune_flr(&flr_add(rho, &flr_constant(&(-&d), rho.arity()))?);
    flr_to_realization(&shifted, &d)
}

/// Selfadjoint realization `Δ + Ξ*(M₀ − L_M(x))⁻¹Ξ` with `Ξ = v`,
/// `M₀ = −Q⁽⁰⁾`, `M_j = Q⁽ʲ⁾`. Expects a representation normalized by
/// [`make_selfadjoint_flr`], so that `M₀` is a signature matrix.
pub fn sa_flr_to_realization(rho: &SaFlr, delta: &MatC) -> Result<Realization> {
    let m0 = -rho.q.coeff(0).clone();
    if !linalg::is_invertible(&m0) {
        return Err(Error::SingularQ0);
    }
    let n = m0.nrows();
    let dev = max_norm(&(&m0 * &m0 - MatC::identity(n, n))).max(linalg::hermitian_defect(&m0));
    if dev > 1e-10 {
        return Err(Error::NotSignature { deviation: dev });
    }
    let a = rho.q.coeffs()[1..].to_vec();
    Realization::new(delta.clone(), rho.v.adjoint(), m0, a, rho.v.clone())
}

/// Structural pruning of an FLR. States that provably never influence
/// `−uQ⁻¹v` (by the zero pattern of the coefficients alone) are removed. The
/// result is checked against the input on random points and discarded if
/// the two disagree.
pub fn prune_flr(rho: &Flr) -> Flr {
    let mut cur = rho.clone();
    loop {
        let next = prune_pass(&cur);
        if next.size() == cur.size() {
            break;
        }
        cur = next;
    }
    if cur.size() == rho.size() || agrees_on_samples(rho, &cur) {
        cur
    } else {
        rho.clone()
    }
}

/// Restriction of a selfadjoint representation to the connected component
/// of the support of `v` in the (symmetric) coefficient pattern. The kept
/// block is a direct summand, so the represented function is unchanged and
/// the coefficients stay Hermitian.
pub fn prune_saflr(rho: &SaFlr) -> SaFlr {
    let n = rho.size();
    let pattern = structural_pattern(&rho.q);
    let mut keep = vec![false; n];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&i| rho.v.row(i).iter().any(|z| *z != ZERO))
        .collect();
    for &i in &stack {
        keep[i] = true;
    }
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !keep[j] && (pattern[i][j] || pattern[j][i]) {
                keep[j] = true;
                stack.push(j);
            }
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    SaFlr {
        q: rho.q.select(&idx, &idx),
        v: rho.v.select_rows(&idx),
    }
}

fn structural_pattern(q: &LinearPencil) -> Vec<Vec<bool>> {
    let (r, c) = (q.rows(), q.cols());
    (0..r)
        .map(|i| {
            (0..c)
                .map(|j| q.coeffs().iter().any(|m| m[(i, j)] != ZERO))
                .collect()
        })
        .collect()
}

/// Perfect matching of rows to columns in the pattern (Kuhn's algorithm).
fn perfect_matching(pattern: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = pattern.len();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        i: usize,
        pattern: &[Vec<bool>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..pattern.len() {
            if pattern[i][j] && !seen[j] {
                seen[j] = true;
                if owner[j].is_none() || augment(owner[j].unwrap(), pattern, seen, owner) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, pattern, &mut seen, &mut col_owner) {
            return None;
        }
    }
    let mut row_to_col = vec![0; n];
    for (j, owner) in col_owner.iter().enumerate() {
        row_to_col[owner.expect("perfect")] = j;
    }
    Some(row_to_col)
}

fn prune_pass(rho: &Flr) -> Flr {
    let n = rho.size();
    if n == 0 {
        return rho.clone();
    }
    let Some(matching) = perfect_matching(&structural_pattern(&rho.q)) else {
        return rho.clone();
    };
    // Reorder columns so the matched entries sit on the diagonal; u follows
    // the columns since −uQ⁻¹v = −(uP)(QP)⁻¹v.
    let q = rho.q.select(&(0..n).collect::<Vec<_>>(), &matching);
    let u = rho.u.select_columns(&matching);
    let pattern = structural_pattern(&q);

    // Unknowns y = Q⁻¹v outside the closure of supp(v) vanish.
    let mut keep = vec![false; n];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&i| rho.v.row(i).iter().any(|z| *z != ZERO))
        .collect();
    stack.iter().for_each(|&i| keep[i] = true);
    while let Some(j) = stack.pop() {
        for i in 0..n {
            if pattern[i][j] && !keep[i] {
                keep[i] = true;
                stack.push(i);
            }
        }
    }
    // Dually for z = uQ⁻¹ and the closure of supp(u).
    let mut keep_u = vec![false; n];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&j| u.column(j).iter().any(|z| *z != ZERO))
        .collect();
    stack.iter().for_each(|&j| keep_u[j] = true);
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if pattern[i][j] && !keep_u[j] {
                keep_u[j] = true;
                stack.push(j);
            }
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| keep[i] && keep_u[i]).collect();
    if idx.len() == n {
        return Flr {
            u,
            q,
            v: rho.v.clone(),
        };
    }
    if idx.is_empty() {
        // The represented function is identically zero.
        let (d1, d2) = rho.value_shape();
        let mut f = flr_affine(&vec![ZERO; rho.arity() + 1]);
        f.u = zeros(d1, 2);
        f.v = zeros(2, d2);
        return f;
    }
    Flr {
        u: u.select_columns(&idx),
        q: q.select(&idx, &idx),
        v: rho.v.select_rows(&idx),
    }
}

fn agrees_on_samples(a: &Flr, b: &Flr) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let g = a.arity().max(1);
    for t in 0..50 {
        let x = random_tuple(&mut rng, g, 1 + t % 2);
        let Ok(va) = a.eval(&x) else { continue };
        match b.eval(&x) {
            Ok(vb) if max_norm(&(&va - &vb)) <= 1e-10 * (1.0 + max_norm(&va)) => {}
            _ => return false,
        }
    }
    true
}

/// Checks the defining identity of `rho` against direct evaluation of `r`
/// on `samples` random complex points of sizes `1..=max_n`. Returns the
/// largest relative deviation seen on in-domain points, or an error naming a
/// point where `r` is defined but `Q(X)` fails the invertibility test.
pub fn validate_flr(rho: &Flr, r: &NcExpr, samples: usize, max_n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = rho.arity().max(r.max_var()).max(1);
    let mut worst = 0.0f64;
    for t in 0..samples {
        let x = random_tuple(&mut rng, g, 1 + t % max_n.max(1));
        let Ok(expected) = eval_expr(r, &x) else {
            continue;
        };
        let got = rho.eval(&x)?;
        worst = worst.max(max_norm(&(&got - &expected)) / (1.0 + max_norm(&expected)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_matrix};
    use crate::ncexpr::parse_expr;

    fn scalar_point(xs: &[f64]) -> MatTuple {
        MatTuple::scalars(&xs.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    fn value(f: &Flr, xs: &[f64]) -> C64 {
        f.eval(&scalar_point(xs)).unwrap()[(0, 0)]
    }

    #[test]
    fn affine_examples() {
        assert_eq!(value(&flr_affine(&[ZERO, ONE]), &[0.7]), c(0.7, 0.0));
        assert_eq!(value(&flr_affine(&[ZERO, ZERO]), &[0.7]), ZERO);
        let f = flr_affine(&[c(3.0, 0.0), ZERO, c(2.0, 0.0)]);
        assert!((value(&f, &[0.0, 1.0]) - c(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rule_sizes() {
        let x1 = flr_affine(&[ZERO, ONE, ZERO]);
        let x2 = flr_affine(&[ZERO, ZERO, ONE]);
        assert_eq!(flr_add(&x1, &x2).unwrap().size(), 4);
        assert_eq!(flr_mul(&x1, &x2).unwrap().size(), 4);
        assert_eq!(flr_inv(&x1).unwrap().size(), 3);
    }

    #[test]
    fn inverse_of_one_minus_x() {
        let f = flr_inv(&flr_affine(&[ONE, -ONE])).unwrap();
        assert!((value(&f, &[0.5]) - c(2.0, 0.0)).norm() < 1e-14);
        let one = flr_inv(&flr_affine(&[ONE])).unwrap();
        assert!((value(&one, &[]) - ONE).norm() < 1e-14);
    }

    #[test]
    fn inverse_of_product_matches_displayed_pencil() {
        let x1 = flr_affine(&[ZERO, ONE, ZERO]);
        let x2 = flr_affine(&[ZERO, ZERO, ONE]);
        let f = flr_inv(&flr_mul(&x1, &x2).unwrap()).unwrap();
        #[rustfmt::skip]
        let q0 = real_matrix(5, 5, &[
            0.0, 0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, -1.0, 1.0, 0.0,
            0.0, 0.0, 1.0, 0.0, 0.0,
            1.0, 1.0, 0.0, 0.0, 0.0,
        ]);
        let mut q1 = zeros(5, 5);
        q1[(1, 3)] = -ONE;
        let mut q2 = zeros(5, 5);
        q2[(3, 1)] = -ONE;
        assert_eq!(f.q.coeffs(), &[q0, q1, q2]);
        let e1 = real_matrix(1, 5, &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.u, e1);
        assert_eq!(f.v, e1.transpose());
    }

    #[test]
    fn adjoint_flr() {
        let f = build_flr(&parse_expr("x1*x2", 2).unwrap(), 2).unwrap();
        let fa = flr_adjoint(&f);
        assert_eq!(flr_adjoint(&fa), f);
        let x = scalar_point(&[2.0, 3.0]);
        assert!((fa.eval(&x).unwrap()[(0, 0)] - c(6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn selfadjoint_doubling_of_x1() {
        let f = build_flr(&NcExpr::var(1), 1).unwrap();
        let s = make_selfadjoint_flr(&f, false).unwrap();
        assert_eq!(s.size(), 4);
        assert!(s.q.is_hermitian(0.0));
        assert!((s.eval(&scalar_point(&[0.3])).unwrap()[(0, 0)] - c(0.3, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn hermitized_constant() {
        let f = build_flr(&NcExpr::real(1.0), 1).unwrap();
        let h = hermitize_flr(&f);
        let v = h.eval(&MatTuple::zeros(1, 2)).unwrap();
        let expected = real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]).kronecker(&MatC::identity(2, 2));
        assert!(max_norm(&(v - expected)) < 1e-14);
    }

    #[test]
    fn pruning_removes_a_decoupled_state() {
        let mut f = flr_affine(&[ZERO, ONE]);
        let q = f.q.map(|j, m| {
            let mut out = linalg::block_diag(m, &zeros(1, 1));
            if j == 0 {
                out[(2, 2)] = ONE;
            }
            out
        });
        f = Flr::new(hstack(&f.u, &zeros(1, 1)), q, vstack(&f.v, &zeros(1, 1))).unwrap();
        let p = prune_flr(&f);
        assert_eq!(p.size(), 2);
        assert_eq!(prune_flr(&p).size(), 2);
    }
}
