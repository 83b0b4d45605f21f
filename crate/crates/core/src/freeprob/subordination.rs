//! Operator-valued subordination for sums of free variables.

use super::cauchy::{OpValued, TensorTerm};
use crate::error::{Error, Result};
use crate::linalg::{lu_inverse, max_norm, re, MatC};

#[derive(Clone, Debug)]
pub struct SubordinationConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Consecutive non-decreasing steps before falling back to damping ½.
    pub stall_window: usize,
    /// When the delta stops improving for `2·stall_window` steps below this
    /// level, the iteration has hit its roundoff floor and is accepted.
    pub floor_tol: f64,
}

impl Default for SubordinationConfig {
    fn default() -> Self {
        SubordinationConfig {
            tol: 1e-11,
            max_iter: 20_000,
            damping: 1.0,
            stall_window: 50,
            floor_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Subordination {
    pub g: MatC,
    pub omega1: MatC,
    pub omega2: MatC,
    pub iterations: usize,
}

/// Fixed point of `W ↦ h_Y(h_X(W) + B) + B` starting from `w0` (or `B`).
///
/// Returns `G_{X+Y}(B) = G_X(ω₁)` together with `ω₁` and `ω₂ = h_X(ω₁) + B`.
pub fn subordinate_pair(
    x: &dyn OpValued,
    y: &dyn OpValued,
    b: &MatC,
    w0: Option<&MatC>,
    cfg: &SubordinationConfig,
) -> Result<Subordination> {
    if x.dim() != y.dim() || b.nrows() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim().max(b.nrows()),
        });
    }
    let step = |w: &MatC| -> Result<MatC> {
        let hx = x.h_transform(w)?;
        Ok(y.h_transform(&(hx + b))? + b)
    };
    let mut w = w0.cloned().unwrap_or_else(|| b.clone());
    let mut damping = cfg.damping;
    let mut last_delta = f64::INFINITY;
    let mut stalled = 0;
    let (mut best, mut since_best) = (f64::INFINITY, 0);
    for it in 1..=cfg.max_iter {
        let f = step(&w)?;
        let delta = max_norm(&(&f - &w));
        w = if damping == 1.0 {
            f
        } else {
            &w * re(1.0 - damping) + f * re(damping)
        };
        if !delta.is_finite() {
            return Err(Error::NonFinite);
        }
        if delta < best {
            best = delta;
            since_best = 0;
        } else {
            since_best += 1;
        }
        let at_floor =
            since_best >= 2 * cfg.stall_window && best <= cfg.floor_tol * max_norm(&w).max(1.0);
        if delta <= cfg.tol * max_norm(&w).max(1.0) || at_floor {
            let g = x.cauchy(&w)?;
            let omega2 = x.h_transform(&w)? + b;
            return Ok(Subordination {
                g,
                omega1: w,
                omega2,
                iterations: it,
            });
        }
        stalled = if delta >= last_delta { stalled + 1 } else { 0 };
        if stalled >= cfg.stall_window && damping > 0.5 {
            damping = 0.5;
            stalled = 0;
        }
        last_delta = delta;
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        last_delta,
    })
}

/// `X + Y` as an operator-valued variable, evaluated by subordination.
struct FreeSum<'a> {
    left: &'a dyn OpValued,
    right: &'a dyn OpValued,
    cfg: &'a SubordinationConfig,
}

impl OpValued for FreeSum<'_> {
    fn dim(&self) -> usize {
        self.left.dim()
    }

    fn cauchy(&self, b: &MatC) -> Result<MatC> {
        Ok(subordinate_pair(self.left, self.right, b, None, self.cfg)?.g)
    }

    /// `h_{X+Y}(B) = ω₁ + ω₂ − 2B`.
    fn h_transform(&self, b: &MatC) -> Result<MatC> {
        let s = subordinate_pair(self.left, self.right, b, None, self.cfg)?;
        Ok(s.omega1 + s.omega2 - b * re(2.0))
    }
}

/// `G_{Σ Λ_j ⊗ x_j}(B)` for freely independent `x_j`.
///
/// `warm` carries `ω₁` between calls; it is used for the outermost pair
/// only, which is the only one whose argument tracks the caller's.
pub fn tensor_sum_cauchy(
    terms: &[TensorTerm],
    b: &MatC,
    warm: Option<&MatC>,
    cfg: &SubordinationConfig,
) -> Result<Subordination> {
    match terms {
        [] => {
            let g = lu_inverse(b).ok_or(Error::SingularBlock("B".into()))?;
            Ok(Subordination {
                g,
                omega1: b.clone(),
                omega2: b.clone(),
                iterations: 0,
            })
        }
        [t] => Ok(Subordination {
            g: t.cauchy(b)?,
            omega1: b.clone(),
            omega2: b.clone(),
            iterations: 0,
        }),
        [t1, t2] => subordinate_pair(t1, t2, b, warm, cfg),
        [init @ .., last] => {
            let nested = NestedSum { terms: init, cfg };
            subordinate_pair(&nested, last, b, warm, cfg)
        }
    }
}

struct NestedSum<'a> {
    terms: &'a [TensorTerm],
    cfg: &'a SubordinationConfig,
}

impl OpValued for NestedSum<'_> {
    fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    fn cauchy(&self, b: &MatC) -> Result<MatC> {
        match self.terms {
            [t] => t.cauchy(b),
            [t1, t2] => FreeSum {
                left: t1,
                right: t2,
                cfg: self.cfg,
            }
            .cauchy(b),
            [init @ .., last] => {
                let inner = NestedSum {
                    terms: init,
                    cfg: self.cfg,
                };
                Ok(subordinate_pair(&inner, last, b, None, self.cfg)?.g)
            }
            [] => lu_inverse(b).ok_or(Error::SingularBlock("B".into())),
        }
    }

    fn h_transform(&self, b: &MatC) -> Result<MatC> {
        match self.terms {
            [t] => t.h_transform(b),
            [t1, t2] => FreeSum {
                left: t1,
                right: t2,
                cfg: self.cfg,
            }
            .h_transform(b),
            [init @ .., last] => {
                let inner = NestedSum {
                    terms: init,
                    cfg: self.cfg,
                };
                FreeSum {
                    left: &inner,
                    right: last,
                    cfg: self.cfg,
                }
                .h_transform(b)
            }
            [] => Ok(MatC::zeros(b.nrows(), b.ncols())),
        }
    }
}

/// `G_{Λ̂(X)}(B) = G_{Σ Λ̂_j ⊗ x_j}(B − Λ̂₀)`.
pub fn pencil_sum_cauchy(
    lambda0: &MatC,
    terms: &[TensorTerm],
    b: &MatC,
    warm: Option<&MatC>,
    cfg: &SubordinationConfig,
) -> Result<Subordination> {
    tensor_sum_cauchy(terms, &(b - lambda0), warm, cfg)
}
