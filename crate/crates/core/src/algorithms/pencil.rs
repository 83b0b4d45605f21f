use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, block2, max_norm, zeros, MatC, C64};
use crate::linrep::{
    build_flr, build_flr_mat, flr_add, flr_constant, hermitize_flr, make_selfadjoint_flr,
    prune_flr, prune_saflr, sa_flr_to_realization, Flr, LinearPencil, SaFlr,
};
use crate::ncexpr::{value_at_zero, MatNcExpr, MatTuple, NcExpr};
use crate::realization::symmetric_cut_down;

/// How a selfadjoint expression is turned into a pencil.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RealizationPath {
    /// Doubled selfadjoint linear representation `−v*Q(x)⁻¹v`.
    #[default]
    Saflr,
    /// Selfadjoint descriptor realization cut down to its
    /// controllable/observable part. Needs regularity at zero.
    Minimal,
}

impl std::str::FromStr for RealizationPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saflr" => Ok(RealizationPath::Saflr),
            "minimal" => Ok(RealizationPath::Minimal),
            other => Err(Error::Format(format!(
                "unknown path {other:?} (expected saflr or minimal)"
            ))),
        }
    }
}

/// `r(x) = Δ + Ξ* Λ(x)⁻¹ Ξ` with Hermitian `Δ` and Hermitian-coefficient `Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedRealization {
    pub delta: MatC,
    pub xi: MatC,
    pub lambda: LinearPencil,
}

impl GeneralizedRealization {
    pub fn new(delta: MatC, xi: MatC, lambda: LinearPencil) -> Result<Self> {
        let (n, k) = xi.shape();
        if delta.shape() != (k, k) || lambda.rows() != n || lambda.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "Δ {:?}, Ξ {:?}, Λ {}x{}",
                delta.shape(),
                xi.shape(),
                lambda.rows(),
                lambda.cols()
            )));
        }
        Ok(GeneralizedRealization { delta, xi, lambda })
    }

    pub fn corner(&self) -> usize {
        self.delta.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.xi.nrows()
    }

    pub fn arity(&self) -> usize {
        self.lambda.arity()
    }

    pub fn eval(&self, x: &MatTuple) -> Result<MatC> {
        let n = x.dim();
        let lx = self.lambda.eval(x)?;
        let inv = linalg::domain_inverse(&lx).ok_or_else(|| Error::Domain {
            path: "Λ(X)".into(),
        })?;
        let id = MatC::identity(n, n);
        let xk = self.xi.kronecker(&id);
        Ok(self.delta.kronecker(&id) + xk.adjoint() * inv * xk)
    }
}

/// Hermitian pencil `Λ̂(x) = [[Δ, Ξ*], [Ξ, −Λ(x)]]` whose top-left `k × k`
/// Schur complement is the realized function.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedPencil {
    pub pencil: LinearPencil,
    pub corner: usize,
}

impl ShiftedPencil {
    pub fn size(&self) -> usize {
        self.pencil.rows()
    }

    pub fn arity(&self) -> usize {
        self.pencil.arity()
    }

    pub fn coeff(&self, j: usize) -> &MatC {
        self.pencil.coeff(j)
    }

    /// Value of the realized function: `Δ − Ξ*(−Λ(X))⁻¹Ξ` read from the pencil.
    pub fn eval(&self, x: &MatTuple) -> Result<MatC> {
        let n = x.dim();
        let full = self.pencil.eval(x)?;
        let k = self.corner * n;
        let m = full.nrows() - k;
        let a = full.view((0, 0), (k, k));
        let b = full.view((0, k), (k, m));
        let c = full.view((k, 0), (m, k));
        let d = full.view((k, k), (m, m)).into_owned();
        let dinv = linalg::domain_inverse(&d).ok_or_else(|| Error::Domain {
            path: "Λ(X)".into(),
        })?;
        Ok(a - b * dinv * c)
    }
}

fn pencil_tol(p: &LinearPencil) -> f64 {
    1e-10 * p.coeffs().iter().map(max_norm).fold(1.0, f64::max)
}

/// Assembles the shifted pencil of a selfadjoint generalized realization.
pub fn build_shifted_pencil(r: &GeneralizedRealization) -> Result<ShiftedPencil> {
    let tol = pencil_tol(&r.lambda);
    if linalg::hermitian_defect(&r.delta) > tol {
        return Err(Error::NotSelfadjointInput("Δ is not Hermitian".into()));
    }
    if !r.lambda.is_hermitian(tol) {
        return Err(Error::NotSelfadjointInput(
            "Λ has non-Hermitian coefficients".into(),
        ));
    }
    let (n, k) = r.xi.shape();
    let coeffs = r
        .lambda
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            if j == 0 {
                block2(&r.delta, &r.xi.adjoint(), &r.xi, &(-l))
            } else {
                block2(&zeros(k, k), &zeros(k, n), &zeros(n, k), &(-l))
            }
        })
        .map(|c| (&c + c.adjoint()) * C64::new(0.5, 0.0))
        .collect();
    Ok(ShiftedPencil {
        pencil: LinearPencil::new(coeffs)?,
        corner: k,
    })
}

fn from_saflr(sa: &SaFlr) -> GeneralizedRealization {
    let k = sa.v.ncols();
    GeneralizedRealization {
        delta: zeros(k, k),
        xi: sa.v.clone(),
        lambda: sa.q.map(|_, c| -c),
    }
}

fn minimal_from_flr(rho: &Flr) -> Result<GeneralizedRealization> {
    let arity = rho.arity();
    let q0inv = linalg::checked_inverse(rho.q.coeff(0)).ok_or(Error::SingularQ0)?;
    let at_zero = -(&rho.u * q0inv * &rho.v);
    let delta = (&at_zero + at_zero.adjoint()) * C64::new(0.5, 0.0);
    let shifted = prune_flr(&flr_add(rho, &flr_constant(&(-&at_zero), arity))?);
    let sa = make_selfadjoint_flr(&shifted, true)?;
    let real = symmetric_cut_down(&sa_flr_to_realization(&sa, &delta)?)?;
    // Δ + B*(J − L_A(x))⁻¹B.
    let mut coeffs = vec![real.j.clone()];
    coeffs.extend(real.a.iter().map(|a| -a));
    GeneralizedRealization::new(real.d, real.b, LinearPencil::new(coeffs)?.with_arity(arity))
}

/// Generalized realization of `½(r + r*)` for a square matrix-valued FLR.
pub fn realize_flr(rho: &Flr, path: RealizationPath) -> Result<GeneralizedRealization> {
    match path {
        RealizationPath::Saflr => {
            let sa = prune_saflr(&make_selfadjoint_flr(&prune_flr(rho), false)?);
            Ok(from_saflr(&sa))
        }
        RealizationPath::Minimal => minimal_from_flr(rho),
    }
}

/// Realization of `½(r + r*)`; for selfadjoint `r` this realizes `r` on
/// Hermitian tuples. Variable-free expressions give a `Δ`-only realization.
pub fn realize_at(
    r: &NcExpr,
    arity: usize,
    path: RealizationPath,
) -> Result<GeneralizedRealization> {
    r.check_arity(arity)?;
    if r.max_var() == 0 {
        let value = value_at_zero(r)?;
        let lambda = LinearPencil::new(vec![zeros(0, 0); arity + 1])?;
        return GeneralizedRealization::new(
            MatC::from_element(1, 1, C64::new(value.re, 0.0)),
            zeros(0, 1),
            lambda,
        );
    }
    realize_flr(&build_flr(r, arity)?, path)
}

pub fn realize_mat_at(
    ur: &MatNcExpr,
    arity: usize,
    path: RealizationPath,
) -> Result<GeneralizedRealization> {
    realize_flr(&build_flr_mat(ur, arity)?, path)
}

/// Realization of the hermitization `[[0, r], [r*, 0]]`.
pub fn realize_hermitized(
    r: &NcExpr,
    arity: usize,
    path: RealizationPath,
) -> Result<GeneralizedRealization> {
    let rho = prune_flr(&build_flr(r, arity)?);
    match path {
        RealizationPath::Saflr => Ok(from_saflr(&prune_saflr(&hermitize_flr(&rho)))),
        RealizationPath::Minimal => {
            // [[0, r], [r*, 0]] = e₁ r e₂ᵀ + e₂ r* e₁ᵀ.
            let e = [
                linalg::real_matrix(2, 1, &[1.0, 0.0]),
                linalg::real_matrix(2, 1, &[0.0, 1.0]),
            ];
            let place = |f: &Flr, row: usize, col: usize| Flr {
                u: &e[row] * &f.u,
                q: f.q.clone(),
                v: &f.v * e[col].transpose(),
            };
            let top = place(&rho, 0, 1);
            let bottom = place(&crate::linrep::flr_adjoint(&rho), 1, 0);
            minimal_from_flr(&flr_add(&top, &bottom)?)
        }
    }
}
