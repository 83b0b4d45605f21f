//! Randomized equivalence testing on matrix points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{eval_expr, MatTuple, NcExpr};
use crate::linalg::{max_norm, MatC, C64};

#[derive(Clone, Debug)]
pub struct EquivConfig {
    pub sizes: Vec<usize>,
    /// Trials per size.
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EquivConfig {
    fn default() -> Self {
        EquivConfig {
            sizes: vec![1, 2, 3, 4],
            trials: 20,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Equivalent { samples: usize },
    Distinguished { witness: MatTuple, deviation: f64 },
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equivalent { .. } => "equivalent",
            Verdict::Distinguished { .. } => "distinguished",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Standard complex Gaussian matrix tuple (`E|z|² = 1` per entry).
pub fn random_tuple<R: Rng>(rng: &mut R, arity: usize, n: usize) -> MatTuple {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mats = (0..arity)
        .map(|_| {
            MatC::from_fn(n, n, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(s * re, s * im)
            })
        })
        .collect();
    MatTuple::new(mats).expect("finite Gaussian samples")
}

/// Compares `r1` and `r2` on random matrix points of the configured sizes.
///
/// A point counts only if both expressions are defined there. Trial `t` of
/// size index `s` draws from its own ChaCha stream, so the verdict does not
/// depend on scheduling.
pub fn matrix_equiv(r1: &NcExpr, r2: &NcExpr, cfg: &EquivConfig) -> Verdict {
    let arity = r1.max_var().max(r2.max_var()).max(1);
    let jobs: Vec<(usize, usize, usize)> = cfg
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(si, &n)| (0..cfg.trials.max(1)).map(move |t| (si, n, t)))
        .collect();
    let outcomes: Vec<Option<(f64, MatTuple)>> = jobs
        .par_iter()
        .map(|&(si, n, t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((si as u64) << 32) | t as u64);
            let x = random_tuple(&mut rng, arity, n);
            match (eval_expr(r1, &x), eval_expr(r2, &x)) {
                (Ok(a), Ok(b)) => {
                    let dev = max_norm(&(&a - &b)) / (1.0 + max_norm(&a));
                    Some((dev, x))
                }
                // Outside one of the domains: the point says nothing.
                _ => None,
            }
        })
        .collect();
    let mut samples = 0;
    for (dev, x) in outcomes.into_iter().flatten() {
        samples += 1;
        if !(dev <= cfg.tol) {
            return Verdict::Distinguished {
                witness: x,
                deviation: dev,
            };
        }
    }
    if samples == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Equivalent { samples }
    }
}
