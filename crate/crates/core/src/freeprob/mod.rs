//! Scalar laws, matricial and operator-valued Cauchy transforms, and
//! subordination for free sums.

mod cauchy;
mod law;
mod subordination;

pub use cauchy::{
    matricial_cauchy, matricial_h, quadrature_cauchy, OpValued, TensorTerm, EIG_COND_MAX,
};
pub use law::{gauss_legendre, Law, LawKind};
pub use subordination::{
    pencil_sum_cauchy, subordinate_pair, tensor_sum_cauchy, Subordination, SubordinationConfig,
};

use crate::error::Result;
use crate::linalg::{MatC, C64};

/// Scalar Cauchy transform of `law` at `z`.
pub fn scalar_cauchy(law: &Law, z: C64) -> C64 {
    law.cauchy(z)
}

/// `h(B) = G(B)⁻¹ − B` for the operator-valued variable `x`.
pub fn h_transform(x: &dyn OpValued, b: &MatC) -> Result<MatC> {
    x.h_transform(b)
}

/// `F(B) = G(B)⁻¹`.
pub fn f_transform(x: &dyn OpValued, b: &MatC) -> Result<MatC> {
    x.f_transform(b)
}
