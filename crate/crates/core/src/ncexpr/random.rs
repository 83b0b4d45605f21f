use rand::Rng;

use super::NcExpr;
use crate::linalg::C64;

/// Shape of the random expressions produced by [`random_expr`].
#[derive(Clone, Debug)]
pub struct RandomExprConfig {
    pub max_depth: usize,
    pub arity: usize,
    /// Relative weights of leaf, sum, product, inverse and adjoint nodes.
    pub weights: [f64; 5],
}

impl RandomExprConfig {
    pub fn new(max_depth: usize, arity: usize) -> Self {
        RandomExprConfig {
            max_depth,
            arity,
            weights: [0.2, 0.25, 0.25, 0.15, 0.15],
        }
    }
}

fn leaf<R: Rng>(rng: &mut R, arity: usize) -> NcExpr {
    if arity > 0 && rng.random_bool(0.65) {
        return NcExpr::var(rng.random_range(1..=arity));
    }
    let re = f64::from(rng.random_range(-3i32..=3));
    if rng.random_bool(0.25) {
        let im = f64::from(rng.random_range(-2i32..=2));
        NcExpr::constant(C64::new(re, im))
    } else {
        NcExpr::real(re)
    }
}

/// Random expression tree of depth at most `cfg.max_depth`.
pub fn random_expr<R: Rng>(rng: &mut R, cfg: &RandomExprConfig) -> NcExpr {
    fn go<R: Rng>(rng: &mut R, cfg: &RandomExprConfig, budget: usize) -> NcExpr {
        if budget == 0 {
            return leaf(rng, cfg.arity);
        }
        let total: f64 = cfg.weights.iter().sum();
        let mut pick = rng.random::<f64>() * total;
        let mut kind = 0;
        for (k, w) in cfg.weights.iter().enumerate() {
            if pick < *w {
                kind = k;
                break;
            }
            pick -= w;
            kind = k;
        }
        match kind {
            0 => leaf(rng, cfg.arity),
            1 => NcExpr::add(go(rng, cfg, budget - 1), go(rng, cfg, budget - 1)),
            2 => NcExpr::mul(go(rng, cfg, budget - 1), go(rng, cfg, budget - 1)),
            3 => NcExpr::inv(go(rng, cfg, budget - 1)),
            _ => NcExpr::adj(go(rng, cfg, budget - 1)),
        }
    }
    go(rng, cfg, cfg.max_depth)
}
