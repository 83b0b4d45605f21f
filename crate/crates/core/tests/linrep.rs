use ncfree::linalg::{block2, hermitian_defect, max_norm, zeros, MatC};
use ncfree::linrep::{
    build_flr, build_flr_with, flr_add, flr_adjoint, flr_inv, flr_mul, hermitize_flr,
    make_selfadjoint_flr, prune_flr, prune_saflr, validate_flr, BuildOptions, Flr,
};
use ncfree::ncexpr::{
    adjoint_expr, eval_expr, random_expr, random_tuple, MatTuple, NcExpr, RandomExprConfig,
};
use ncfree::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 200;

fn expr(seed: u64, depth: usize) -> NcExpr {
    random_expr(
        &mut ChaCha8Rng::seed_from_u64(seed),
        &RandomExprConfig::new(depth, 2),
    )
}

fn hermitian_tuple(rng: &mut ChaCha8Rng, n: usize) -> MatTuple {
    let x = random_tuple(rng, 2, n);
    MatTuple::new(
        x.mats()
            .iter()
            .map(|m| (m + m.adjoint()) * C64::new(0.5, 0.0))
            .collect(),
    )
    .unwrap()
}

/// Largest relative deviation of `rho` from `r` on in-domain samples; fails
/// if `r` is defined at a point where `Q(X)` is not invertible.
fn deviation(rho: &Flr, r: &NcExpr, seed: u64) -> f64 {
    validate_flr(rho, r, SAMPLES, 3, seed).expect("domain superset")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructors_preserve_the_identity(seed in any::<u64>()) {
        let (a, b) = (expr(seed, 3), expr(seed ^ 0x55, 3));
        let (fa, fb) = (build_flr(&a, 2).unwrap(), build_flr(&b, 2).unwrap());
        prop_assert!(deviation(&fa, &a, seed) <= 1e-8);

        let sum = flr_add(&fa, &fb).unwrap();
        prop_assert_eq!(sum.size(), fa.size() + fb.size());
        prop_assert!(deviation(&sum, &NcExpr::add(a.clone(), b.clone()), seed) <= 1e-8);

        let prod = flr_mul(&fa, &fb).unwrap();
        prop_assert_eq!(prod.size(), fa.size() + fb.size());
        prop_assert!(deviation(&prod, &NcExpr::mul(a.clone(), b.clone()), seed) <= 1e-8);

        let inv = flr_inv(&fa).unwrap();
        prop_assert_eq!(inv.size(), fa.size() + 1);
        prop_assert!(deviation(&inv, &NcExpr::inv(a.clone()), seed) <= 1e-8);

        let adj = flr_adjoint(&fa);
        prop_assert!(deviation(&adj, &NcExpr::adj(a.clone()), seed) <= 1e-8);

        let pruned = prune_flr(&prod);
        prop_assert!(pruned.size() <= prod.size());
        prop_assert!(deviation(&pruned, &NcExpr::mul(a.clone(), b), seed) <= 1e-8);

        let literal = build_flr_with(&a, 2, BuildOptions { collapse_affine: false }).unwrap();
        prop_assert!(deviation(&literal, &a, seed) <= 1e-8);
    }

    #[test]
    fn selfadjoint_constructions(seed in any::<u64>()) {
        let r = expr(seed, 3);
        let rho = build_flr(&r, 2).unwrap();
        let sa = prune_saflr(&make_selfadjoint_flr(&rho, false).unwrap());
        let herm = hermitize_flr(&rho);
        let r_star = adjoint_expr(&r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in 0..SAMPLES / 4 {
            let x = hermitian_tuple(&mut rng, 1 + t % 3);
            let (Ok(v), Ok(vs)) = (eval_expr(&r, &x), eval_expr(&r_star, &x)) else { continue };
            let sym = (&v + &vs) * C64::new(0.5, 0.0);
            let got = sa.eval(&x).expect("domain superset");
            let scale = 1.0 + max_norm(&sym);
            prop_assert!(max_norm(&(&got - &sym)) <= 1e-8 * scale);
            prop_assert!(hermitian_defect(&got) <= 1e-9 * scale);

            let n = x.dim();
            let expected = block2(&zeros(n, n), &v, &v.adjoint(), &zeros(n, n));
            let got = herm.eval(&x).expect("domain superset");
            prop_assert!(max_norm(&(&got - &expected)) <= 1e-8 * (1.0 + max_norm(&v)));
        }
    }
}

#[test]
fn normalized_doubling_has_signature_constant_term() {
    let r = ncfree::ncexpr::parse_expr("x1*inv(3 - x2*x1)", 2).unwrap();
    let sa = make_selfadjoint_flr(&build_flr(&r, 2).unwrap(), true).unwrap();
    let q0: &MatC = sa.q.coeff(0);
    let sq = q0 * q0;
    assert!(max_norm(&(sq - MatC::identity(q0.nrows(), q0.ncols()))) <= 1e-12);
}
