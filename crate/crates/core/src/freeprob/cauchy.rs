//! Matricial and operator-valued Cauchy transforms.

use super::law::Law;
use crate::error::{Error, Result};
use crate::linalg::{
    eig_decomposition, hermitian_eig, identity, lu_inverse, max_norm, one_norm, zeros, MatC, C64,
};

/// Eigenvector matrices worse conditioned than this fall back to quadrature.
pub const EIG_COND_MAX: f64 = 1e8;

fn check_off_support(mu: &Law, lam: C64, scale: f64) -> Result<()> {
    if mu.distance_to_support(lam) <= 1e-13 * scale {
        return Err(Error::NearSingularResolvent { t: lam.re });
    }
    Ok(())
}

/// `G_μ(A) = ∫ (A − t)⁻¹ dμ(t)` for a square matrix `A` whose spectrum avoids
/// the support of `μ`.
pub fn matricial_cauchy(mu: &Law, a: &MatC) -> Result<MatC> {
    matricial_function(
        mu,
        a,
        |z| mu.cauchy(z),
        || {
            if mu.continuous_support().is_none() && mu.atoms().len() <= a.nrows() {
                atomic_resolvent_sum(mu, a)
            } else {
                quadrature_cauchy(mu, a)
            }
        },
    )
}

/// Matricial `h_μ(A) = G_μ(A)⁻¹ − A`, applied through the eigenvalues of
/// `A` so that no cancellation occurs when `G_μ(A)` is small.
pub fn matricial_h(mu: &Law, a: &MatC) -> Result<MatC> {
    matricial_function(
        mu,
        a,
        |z| mu.h(z),
        || {
            let g = if mu.continuous_support().is_none() && mu.atoms().len() <= a.nrows() {
                atomic_resolvent_sum(mu, a)?
            } else {
                quadrature_cauchy(mu, a)?
            };
            Ok(lu_inverse(&g).ok_or(Error::SingularG)? - a)
        },
    )
}

/// `V diag(f(λ)) V⁻¹` when the eigenvector matrix is well conditioned,
/// `fallback()` otherwise.
fn matricial_function(
    mu: &Law,
    a: &MatC,
    f: impl Fn(C64) -> C64,
    fallback: impl FnOnce() -> Result<MatC>,
) -> Result<MatC> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "matricial transform needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let scale = 1.0 + max_norm(a) + mu.support().0.abs().max(mu.support().1.abs());
    if n == 1 {
        let z = a[(0, 0)];
        check_off_support(mu, z, scale)?;
        return Ok(MatC::from_element(1, 1, f(z)));
    }
    let (lam, v) = eig_decomposition(a)?;
    for &l in &lam {
        check_off_support(mu, l, scale)?;
    }
    if let Some(vinv) = lu_inverse(&v) {
        if one_norm(&v) * one_norm(&vinv) <= EIG_COND_MAX {
            let mut vf = v;
            for (k, &l) in lam.iter().enumerate() {
                let fl = f(l);
                for i in 0..n {
                    vf[(i, k)] *= fl;
                }
            }
            return Ok(vf * vinv);
        }
    }
    fallback()
}

fn atomic_resolvent_sum(mu: &Law, a: &MatC) -> Result<MatC> {
    let n = a.nrows();
    let mut g = zeros(n, n);
    for &(t, w) in mu.atoms() {
        let shifted = a - identity(n) * C64::new(t, 0.0);
        let inv =
            crate::linalg::checked_inverse(&shifted).ok_or(Error::NearSingularResolvent { t })?;
        g += inv * C64::new(w, 0.0);
    }
    Ok(g)
}

/// Brute-force `Σ_k w_k (A − t_k)⁻¹` with node doubling. Slow but makes no
/// assumption on the diagonalizability of `A`.
pub fn quadrature_cauchy(mu: &Law, a: &MatC) -> Result<MatC> {
    let n = a.nrows();
    let eval = |nodes: usize| -> Result<MatC> {
        let mut g = zeros(n, n);
        for (t, w) in mu.discretization(nodes) {
            let shifted = a - identity(n) * C64::new(t, 0.0);
            let inv = lu_inverse(&shifted).ok_or(Error::NearSingularResolvent { t })?;
            g += inv * C64::new(w, 0.0);
        }
        Ok(g)
    };
    let mut nodes = 256;
    let mut prev = eval(nodes)?;
    while nodes < 1 << 16 {
        nodes *= 2;
        let next = eval(nodes)?;
        let change = max_norm(&(&next - &prev));
        prev = next;
        if change <= 1e-10 * (1.0 + max_norm(&prev)) {
            break;
        }
    }
    Ok(prev)
}

/// Anything with an operator-valued Cauchy transform on `M_N(ℂ)`.
pub trait OpValued: Sync {
    fn dim(&self) -> usize;

    fn cauchy(&self, b: &MatC) -> Result<MatC>;

    /// `h(B) = G(B)⁻¹ − B`.
    fn h_transform(&self, b: &MatC) -> Result<MatC> {
        let g = self.cauchy(b)?;
        Ok(lu_inverse(&g).ok_or(Error::SingularG)? - b)
    }

    /// `F(B) = G(B)⁻¹`.
    fn f_transform(&self, b: &MatC) -> Result<MatC> {
        lu_inverse(&self.cauchy(b)?).ok_or(Error::SingularG)
    }
}

/// The operator `Λ ⊗ x` for Hermitian `Λ` and `x` distributed as `law`.
///
/// With `Λ = U diag(λ) U*`, only the nonzero eigenvalues see `x`; the
/// remaining block is handled by a Schur complement.
#[derive(Clone, Debug)]
pub struct TensorTerm {
    law: Law,
    /// Eigenvectors, nonzero eigenvalues first.
    u: MatC,
    lam: Vec<f64>,
}

impl TensorTerm {
    pub fn new(lambda: &MatC, law: Law) -> Result<Self> {
        let (vals, vecs) = hermitian_eig(lambda)?;
        let n = vals.len();
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let keep: Vec<usize> = (0..n).filter(|&i| vals[i].abs() > 1e-12 * top).collect();
        let rest: Vec<usize> = (0..n).filter(|&i| vals[i].abs() <= 1e-12 * top).collect();
        let order: Vec<usize> = keep.iter().chain(rest.iter()).copied().collect();
        let u = MatC::from_fn(n, n, |i, j| vecs[(i, order[j])]);
        let lam = keep.iter().map(|&i| vals[i]).collect();
        Ok(TensorTerm { law, u, lam })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// Number of nonzero eigenvalues of `Λ`.
    pub fn rank(&self) -> usize {
        self.lam.len()
    }
}

impl OpValued for TensorTerm {
    fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// With `B₀` the Schur complement of `U*BU` onto the nonzero eigenspace,
    /// `h(B) = U_d Λ₀ ĥ(Λ₀⁻¹B₀) U_d*`; the complement block of `h` vanishes.
    fn h_transform(&self, b: &MatC) -> Result<MatC> {
        let n = self.dim();
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: b.nrows(),
            });
        }
        let d = self.lam.len();
        if d == 0 {
            return Ok(zeros(n, n));
        }
        let ud = self.u.columns(0, d);
        let mut arg = if d == n {
            self.u.adjoint() * b * &self.u
        } else {
            let rest = self.u.columns(d, n - d);
            let b11 = ud.adjoint() * b * ud;
            let b12 = ud.adjoint() * b * rest;
            let b21 = rest.adjoint() * b * ud;
            let b22 = rest.adjoint() * b * rest;
            let b22inv = lu_inverse(&b22).ok_or(Error::SingularBlock("B22".into()))?;
            b11 - b12 * b22inv * b21
        };
        for (i, &l) in self.lam.iter().enumerate() {
            arg.row_mut(i).unscale_mut(l);
        }
        let mut h0 = matricial_h(&self.law, &arg)?;
        for (i, &l) in self.lam.iter().enumerate() {
            h0.row_mut(i).scale_mut(l);
        }
        Ok(ud * h0 * ud.adjoint())
    }

    fn cauchy(&self, b: &MatC) -> Result<MatC> {
        let n = self.dim();
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: b.nrows(),
            });
        }
        let d = self.lam.len();
        if d == 0 {
            return lu_inverse(b).ok_or(Error::SingularBlock("B".into()));
        }
        let bp = self.u.adjoint() * b * &self.u;
        let scaled_g0 = |b0: MatC| -> Result<MatC> {
            // Ĝ(Λ₀⁻¹B₀)Λ₀⁻¹.
            let mut arg = b0;
            for (i, &l) in self.lam.iter().enumerate() {
                arg.row_mut(i).unscale_mut(l);
            }
            let mut g = matricial_cauchy(&self.law, &arg)?;
            for (j, &l) in self.lam.iter().enumerate() {
                g.column_mut(j).unscale_mut(l);
            }
            Ok(g)
        };
        let gp = if d == n {
            scaled_g0(bp)?
        } else {
            let m = n - d;
            let b11 = bp.view((0, 0), (d, d));
            let b12 = bp.view((0, d), (d, m));
            let b21 = bp.view((d, 0), (m, d));
            let b22 = bp.view((d, d), (m, m)).into_owned();
            let b22inv = lu_inverse(&b22).ok_or(Error::SingularBlock("B22".into()))?;
            let b12_b22inv = b12 * &b22inv;
            let b22inv_b21 = &b22inv * b21;
            let g0 = scaled_g0(b11 - &b12_b22inv * b21)?;
            let top_right = -(&g0 * &b12_b22inv);
            let bottom_left = -(&b22inv_b21 * &g0);
            let bottom_right = &b22inv + &b22inv_b21 * &g0 * &b12_b22inv;
            let mut gp = zeros(n, n);
            gp.view_mut((0, 0), (d, d)).copy_from(&g0);
            gp.view_mut((0, d), (d, m)).copy_from(&top_right);
            gp.view_mut((d, 0), (m, d)).copy_from(&bottom_left);
            gp.view_mut((d, d), (m, m)).copy_from(&bottom_right);
            gp
        };
        Ok(&self.u * gp * self.u.adjoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_row_major};

    #[test]
    fn diagonal_matrix_argument() {
        let mu = Law::semicircle(0.0, 1.0).unwrap();
        let a = MatC::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5, 1.0),
            c(-1.0, 0.3),
        ]));
        let g = matricial_cauchy(&mu, &a).unwrap();
        assert!((g[(0, 0)] - mu.cauchy(c(0.5, 1.0))).norm() < 1e-13);
        assert!((g[(1, 1)] - mu.cauchy(c(-1.0, 0.3))).norm() < 1e-13);
        assert!(g[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn eig_path_matches_quadrature() {
        let mu = Law::marchenko_pastur(2.0, 1.0).unwrap();
        let a =
            from_row_major(2, 2, &[c(1.0, 1.0), c(0.7, 0.0), c(-0.2, 0.1), c(3.0, 0.5)]).unwrap();
        let g1 = matricial_cauchy(&mu, &a).unwrap();
        let g2 = quadrature_cauchy(&mu, &a).unwrap();
        assert!(max_norm(&(g1 - g2)) < 1e-8);
    }

    #[test]
    fn on_support_is_rejected() {
        let mu = Law::semicircle(0.0, 1.0).unwrap();
        let a = MatC::from_element(1, 1, c(0.5, 0.0));
        assert!(matches!(
            matricial_cauchy(&mu, &a),
            Err(Error::NearSingularResolvent { .. })
        ));
    }

    #[test]
    fn tensor_with_rank_one_coefficient() {
        // Λ = e1 e1*: G(B) for diagonal B is diag(G_μ(b1), 1/b2).
        let mu = Law::semicircle(0.0, 1.0).unwrap();
        let lambda =
            from_row_major(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let term = TensorTerm::new(&lambda, mu.clone()).unwrap();
        assert_eq!(term.rank(), 1);
        let b = MatC::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.2, 1.0), c(0.0, 2.0)]));
        let g = term.cauchy(&b).unwrap();
        assert!((g[(0, 0)] - mu.cauchy(c(0.2, 1.0))).norm() < 1e-13);
        assert!((g[(1, 1)] - c(0.0, -0.5)).norm() < 1e-14);
    }
}
