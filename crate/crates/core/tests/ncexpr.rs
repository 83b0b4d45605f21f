use ncfree::linalg::{max_norm, MatC};
use ncfree::ncexpr::{
    adjoint_expr, eval_expr, matrix_equiv, parse_expr, random_expr, random_tuple, series_expand,
    value_at_zero, EquivConfig, MatTuple, NcExpr, RandomExprConfig, SeriesTable, Verdict,
};
use ncfree::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expr(seed: u64, depth: usize, arity: usize) -> NcExpr {
    random_expr(
        &mut ChaCha8Rng::seed_from_u64(seed),
        &RandomExprConfig::new(depth, arity),
    )
}

fn hermitian_tuple(seed: u64, arity: usize, n: usize) -> MatTuple {
    let x = random_tuple(&mut ChaCha8Rng::seed_from_u64(seed), arity, n);
    MatTuple::new(
        x.mats()
            .iter()
            .map(|m| (m + m.adjoint()) * C64::new(0.5, 0.0))
            .collect(),
    )
    .unwrap()
}

fn close(a: &MatC, b: &MatC, tol: f64) -> bool {
    max_norm(&(a - b)) <= tol * (1.0 + max_norm(a).max(max_norm(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printing_round_trips(seed in any::<u64>(), depth in 0usize..6, arity in 1usize..4) {
        let r = expr(seed, depth, arity);
        let printed = r.to_string();
        prop_assert_eq!(parse_expr(&printed, arity).unwrap(), r);
    }

    #[test]
    fn evaluation_is_a_homomorphism(seed in any::<u64>(), n in 1usize..4) {
        let (a, b) = (expr(seed, 3, 2), expr(seed.wrapping_add(1), 3, 2));
        let x = random_tuple(&mut ChaCha8Rng::seed_from_u64(seed), 2, n);
        if let (Ok(va), Ok(vb)) = (eval_expr(&a, &x), eval_expr(&b, &x)) {
            if let Ok(s) = eval_expr(&NcExpr::add(a.clone(), b.clone()), &x) {
                prop_assert!(close(&s, &(&va + &vb), 1e-12));
            }
            if let Ok(p) = eval_expr(&NcExpr::mul(a, b), &x) {
                prop_assert!(close(&p, &(&va * &vb), 1e-12));
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>(), n in 1usize..4) {
        let r = expr(seed, 4, 2);
        let rr = adjoint_expr(&adjoint_expr(&r));
        let x = hermitian_tuple(seed, 2, n);
        match (eval_expr(&r, &x), eval_expr(&rr, &x)) {
            (Ok(a), Ok(b)) => prop_assert!(close(&a, &b, 1e-10)),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "domains differ: {:?} / {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn truncated_series_approximates_near_zero(seed in any::<u64>(), n in 1usize..4) {
        let r = expr(seed, 4, 2);
        prop_assume!(value_at_zero(&r).is_ok());
        let table = series_expand(&r, 2, 8).unwrap();
        // The truncation is only meaningful well inside the disc of
        // convergence: require the top level to be negligible at scale 0.1.
        let top: f64 = SeriesTable::words(2, 8).iter().filter(|w| w.len() == 8).map(|w| table.coeff(w).norm()).sum();
        prop_assume!(top * 0.1f64.powi(8) <= 1e-8);
        let raw = random_tuple(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xabc), 2, n);
        // Spectral norm ≤ Frobenius norm, so this scales each ‖Xⱼ‖ below 0.1.
        let x = MatTuple::new(raw.mats().iter().map(|m| m * C64::new(0.1 / m.norm().max(1e-300), 0.0)).collect())
            .unwrap();
        if let Ok(v) = eval_expr(&r, &x) {
            prop_assert!(max_norm(&(table.eval(&x) - &v)) <= 1e-6, "{r}");
        }
    }
}

#[test]
fn push_through_pair_is_equivalent() {
    let r1 = parse_expr("x1*inv(1 - x2*x1)", 2).unwrap();
    let r2 = parse_expr("inv(1 - x1*x2)*x1", 2).unwrap();
    assert!(matches!(
        matrix_equiv(&r1, &r2, &EquivConfig::default()),
        Verdict::Equivalent { .. }
    ));
    let s1 = series_expand(&r1, 2, 6).unwrap();
    let s2 = series_expand(&r2, 2, 6).unwrap();
    assert_eq!(s1, s2);
    // x1 (x2 x1)^k and nothing else.
    assert_eq!(s1.coeff(&[1, 2, 1]), C64::new(1.0, 0.0));
    assert_eq!(s1.coeff(&[1, 2]), C64::new(0.0, 0.0));
}

#[test]
fn scalar_points_are_one_by_one() {
    let r = parse_expr("inv(2 - x1)*(0+1i)", 1).unwrap();
    let v = eval_expr(&r, &MatTuple::scalars(&[C64::new(1.0, 0.0)])).unwrap();
    assert_eq!(v[(0, 0)], C64::new(0.0, 1.0));
}
