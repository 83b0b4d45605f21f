//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Numeric arguments select criteria, e.g.
//! `cargo test --test acceptance -- 4 5`.

use std::time::Instant;

use ncfree::algorithms::{
    build_shifted_pencil, compute_brown, compute_distribution, realize_at, uniform_grid,
    EpsSchedule, Grid2d, RealizationPath, ShiftedPencil,
};
use ncfree::freeprob::{
    matricial_cauchy, quadrature_cauchy, subordinate_pair, Law, OpValued, SubordinationConfig,
    TensorTerm,
};
use ncfree::linalg::{
    block2, hermitian_eigenvalues, identity, max_norm, rank, real_matrix, schur_inverse,
    singular_values, MatC,
};
use ncfree::linrep::{build_flr, realize_regular, LinearPencil};
use ncfree::ncexpr::{
    eval_expr, eval_mat_expr, parse_expr, random_expr, random_tuple, series_expand, value_at_zero,
    MatNcExpr, MatTuple, RandomExprConfig, SeriesTable,
};
use ncfree::realization::{
    check_similarity, controllable_space, cut_down, realization_series_coeff, similarity_residual,
    unobservable_space,
};
use ncfree::rmt::{
    brown_coverage, compare_density, empirical_spectrum, ensembles_for_laws, presimulated_box,
    presimulated_range,
};
use ncfree::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ANTICOMMUTATOR: &str = "x1*x2 + x2*x1";
const RATIONAL_DISTR: &str =
    "inv(4 - x1) + inv(4 - x1)*x2*inv((4 - x1) - x2*inv(4 - x1)*x2)*x2*inv(4 - x1)";
const RATIONAL_BROWN: &str = "inv(4 - x1)*x2*inv(4 - x1 - (0+4i)*x2*inv(4 - x1)*x2)";
const CIRCULAR: &str = "(x1 + (0+1i)*x2)*0.7071067811865476";
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn semicircle() -> Law {
    Law::semicircle(0.0, 1.0).unwrap()
}

fn rel(a: &MatC, b: &MatC) -> f64 {
    max_norm(&(a - b)) / (1.0 + max_norm(b))
}

fn hermitian_tuple(rng: &mut ChaCha8Rng, arity: usize, n: usize) -> MatTuple {
    let x = random_tuple(rng, arity, n);
    MatTuple::new(
        x.mats()
            .iter()
            .map(|m| (m + m.adjoint()) * C64::new(0.5, 0.0))
            .collect(),
    )
    .unwrap()
}

fn flr_soundness() -> Outcome {
    let (mut worst, mut domain_violations, mut checked) = (0.0f64, 0, 0);
    for i in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + i);
        let g = 1 + (i % 3) as usize;
        let r = random_expr(&mut rng, &RandomExprConfig::new(5, g));
        let rho = build_flr(&r, g).unwrap();
        for n in 1..=4 {
            let x = random_tuple(&mut rng, g, n);
            let Ok(expected) = eval_expr(&r, &x) else {
                continue;
            };
            checked += 1;
            match rho.eval(&x) {
                Ok(v) => worst = worst.max(rel(&v, &expected)),
                Err(_) => domain_violations += 1,
            }
        }
    }
    outcome(
        worst <= 1e-8 && domain_violations == 0,
        format!("{checked} points, worst relative error {worst:.2e} (≤ 1e-8), {domain_violations} singular Q(X)"),
    )
}

fn realization_series() -> Outcome {
    let (mut count, mut worst, mut rank_failures) = (0, 0.0f64, 0);
    let mut seed = SEED;
    while count < 200 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = 1 + (seed % 3) as usize;
        let r = random_expr(&mut rng, &RandomExprConfig::new(5, g));
        if value_at_zero(&r).is_err() {
            continue;
        }
        count += 1;
        let full = realize_regular(&build_flr(&r, g).unwrap()).unwrap();
        let min = cut_down(&full);
        let table = series_expand(&r, g, 6).unwrap();
        for w in SeriesTable::words(g, 6) {
            let want = table.coeff(&w);
            for real in [&full, &min] {
                let got = realization_series_coeff(real, &w)[(0, 0)];
                worst = worst.max((got - want).norm() / (1.0 + want.norm()));
            }
        }
        if rank(&controllable_space(&min)) != min.dim() || unobservable_space(&min).ncols() != 0 {
            rank_failures += 1;
        }
    }
    outcome(
        worst <= 1e-9 && rank_failures == 0,
        format!("200 expressions, worst coefficient error {worst:.2e} (≤ 1e-9), {rank_failures} non-minimal cut-downs"),
    )
}

fn shifted(corner: usize, coeffs: Vec<MatC>) -> ShiftedPencil {
    ShiftedPencil {
        pencil: LinearPencil::new(coeffs).unwrap(),
        corner,
    }
}

fn anticommutator_fixture() -> ShiftedPencil {
    shifted(
        1,
        vec![
            real_matrix(
                5,
                5,
                &[
                    0., 0., 0., 0., 1., //
                    0., 0., 0., 0., -1., //
                    0., 0., 0., -1., 0., //
                    0., 0., -1., 0., 0., //
                    1., -1., 0., 0., 0.,
                ],
            ),
            real_matrix(
                5,
                5,
                &[
                    0., 0., 0., 0., 0., //
                    0., 0., 1., 0., 0., //
                    0., 1., 0., 0., 0., //
                    0., 0., 0., 0., 0., //
                    0., 0., 0., 0., 0.,
                ],
            ),
            real_matrix(
                5,
                5,
                &[
                    0., 0., 0., 0., 0., //
                    0., 0., 0., 1., 0., //
                    0., 0., 0., 0., 0., //
                    0., 1., 0., 0., 0., //
                    0., 0., 0., 0., 0.,
                ],
            ),
        ],
    )
}

fn rational_distr_fixture() -> ShiftedPencil {
    shifted(
        1,
        vec![
            real_matrix(3, 3, &[0., 0.5, 0., 0.5, -1., 0., 0., 0., -1.]),
            real_matrix(3, 3, &[0., 0., 0., 0., 0.25, 0., 0., 0., 0.25]),
            real_matrix(3, 3, &[0., 0., 0., 0., 0., 0.25, 0., 0.25, 0.]),
        ],
    )
}

fn fixtures() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut mismatched_domains = 0;
    for (expr, fixture) in [
        (ANTICOMMUTATOR, anticommutator_fixture()),
        (RATIONAL_DISTR, rational_distr_fixture()),
    ] {
        let r = parse_expr(expr, 2).unwrap();
        let built =
            build_shifted_pencil(&realize_at(&r, 2, RealizationPath::Saflr).unwrap()).unwrap();
        for t in 0..100 {
            let x = hermitian_tuple(&mut rng, 2, 1 + t % 4);
            match (built.eval(&x), fixture.eval(&x)) {
                (Ok(a), Ok(b)) => worst = worst.max(rel(&a, &b)),
                (Err(_), Err(_)) => {}
                _ => mismatched_domains += 1,
            }
        }
    }

    let e = |s: &str| parse_expr(s, 2).unwrap();
    let (a, s) = ("inv(1 - x1)", "inv((1 - x1) - x2*inv(1 - x1)*x2)");
    let w = MatNcExpr::from_rows(vec![
        vec![
            e(&format!("{a} + {a}*x2*{s}*x2*{a}")),
            e(&format!("{a}*x2*{s}")),
        ],
        vec![e(&format!("{s}*x2*{a}")), e(s)],
    ])
    .unwrap();
    let m = MatNcExpr::from_rows(vec![
        vec![e("1 - x1"), e("-x2")],
        vec![e("-x2"), e("1 - x1")],
    ])
    .unwrap();
    let (mut in_domain, mut worst_inverse) = (0, 0.0f64);
    while in_domain < 100 {
        let n = 1 + in_domain % 4;
        let x = random_tuple(&mut rng, 2, n);
        let (Ok(wx), Ok(mx)) = (eval_mat_expr(&w, &x), eval_mat_expr(&m, &x)) else {
            continue;
        };
        in_domain += 1;
        let id = identity(2 * n);
        worst_inverse =
            worst_inverse.max(max_norm(&(&wx * &mx - &id)) / (1.0 + max_norm(&wx) * max_norm(&mx)));
    }
    outcome(
        worst <= 1e-8 && mismatched_domains == 0 && worst_inverse <= 1e-8,
        format!(
            "pencils: worst {worst:.2e} (≤ 1e-8), {mismatched_domains} domain mismatches; w·m = I: worst {worst_inverse:.2e} (≤ 1e-8)"
        ),
    )
}

fn subordination() -> Outcome {
    let one = identity(1);
    let x = TensorTerm::new(&one, semicircle()).unwrap();
    let y = TensorTerm::new(&one, semicircle()).unwrap();
    let target = Law::semicircle(0.0, 2.0).unwrap();
    let cfg = SubordinationConfig::default();
    let (mut err, mut residual) = (0.0f64, 0.0f64);
    for z in [
        C64::new(0.0, 1.0),
        C64::new(1.0, 1.0),
        C64::new(0.0, 2.0),
        C64::new(3.0, 0.1),
    ] {
        let b = MatC::from_element(1, 1, z);
        let s = subordinate_pair(&x, &y, &b, None, &cfg).unwrap();
        err = err.max(max_norm(&(&s.g - quadrature_cauchy(&target, &b).unwrap())));
        let sum = &s.omega1 + &s.omega2;
        let fixed = y
            .h_transform(&(x.h_transform(&s.omega1).unwrap() + &b))
            .unwrap()
            + &b;
        for r in [
            max_norm(&(x.f_transform(&s.omega1).unwrap() + &b - &sum)),
            max_norm(&(y.f_transform(&s.omega2).unwrap() + &b - &sum)),
            max_norm(&(x.cauchy(&s.omega1).unwrap() - y.cauchy(&s.omega2).unwrap())),
            max_norm(&(&s.omega1 - fixed)),
        ] {
            residual = residual.max(r);
        }
    }
    outcome(
        err <= 1e-6 && residual <= 1e-9,
        format!("worst Cauchy error {err:.2e} (≤ 1e-6), worst residual {residual:.2e} (≤ 1e-9)"),
    )
}

fn l1_against(t: &[f64], f: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let d: Vec<f64> = t.iter().zip(f).map(|(&x, &y)| (y - g(x)).abs()).collect();
    t.windows(2)
        .zip(d.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn identity_distribution() -> Outcome {
    let law = semicircle();
    let t = uniform_grid(-2.5, 2.5, 600);
    let r = parse_expr("x1", 1).unwrap();
    let d = compute_distribution(
        &r,
        1,
        &[law.clone()],
        &t,
        1e-3,
        &EpsSchedule::default(),
        RealizationPath::Saflr,
    )
    .unwrap();
    let l1 = l1_against(&t, &d.density, |x| law.density(x));
    outcome(
        l1 <= 0.02,
        format!(
            "L1 {l1:.4} (≤ 0.02), mass {:.4}, {} failed points",
            d.mass,
            d.failures.len()
        ),
    )
}

fn against_simulation(expr: &str, laws: &[Law]) -> Outcome {
    let r = parse_expr(expr, 2).unwrap();
    let (lo, hi) = presimulated_range(&r, laws, 200, SEED, 0.1).unwrap();
    let t = uniform_grid(lo, hi, 600);
    let d = compute_distribution(
        &r,
        2,
        laws,
        &t,
        1e-3,
        &EpsSchedule::default(),
        RealizationPath::Saflr,
    )
    .unwrap();
    let spectrum =
        empirical_spectrum(&r, &ensembles_for_laws(laws, 1000, SEED).unwrap(), 5, true).unwrap();
    let cmp = compare_density(&d, spectrum.pool.real().unwrap(), 60).unwrap();
    outcome(
        cmp.l1 <= 0.05,
        format!(
            "L1 {:.4} (≤ 0.05), KS {:.4}, mass {:.4}, grid [{lo:.3}, {hi:.3}], {} failed points, {} discarded draws",
            cmp.l1,
            cmp.ks,
            d.mass,
            d.failures.len(),
            spectrum.discarded
        ),
    )
}

fn anticommutator() -> Outcome {
    against_simulation(
        ANTICOMMUTATOR,
        &[Law::marchenko_pastur(1.0, 1.0).unwrap(), semicircle()],
    )
}

fn rational_distribution() -> Outcome {
    against_simulation(RATIONAL_DISTR, &[semicircle(), semicircle()])
}

fn circular_element() -> Outcome {
    let r = parse_expr(CIRCULAR, 2).unwrap();
    let b = compute_brown(
        &r,
        2,
        &[semicircle(), semicircle()],
        &Grid2d::square(1.5, 121),
        0.01,
        &EpsSchedule::default(),
        RealizationPath::Saflr,
    )
    .unwrap();
    let disk = b.mass_where(|x, y| x * x + y * y < 1.0);
    outcome(
        disk >= 0.95 && (0.9..=1.05).contains(&b.mass),
        format!(
            "disk mass {disk:.4} (≥ 0.95), total mass {:.4} (in [0.9, 1.05]), {} failed points",
            b.mass,
            b.failures.len()
        ),
    )
}

fn rational_brown() -> Outcome {
    let r = parse_expr(RATIONAL_BROWN, 2).unwrap();
    let laws = [semicircle(), semicircle()];
    let [x0, x1, y0, y1] = presimulated_box(&r, &laws, 200, SEED, 0.1).unwrap();
    let grid = Grid2d {
        x_min: x0,
        x_max: x1,
        nx: 101,
        y_min: y0,
        y_max: y1,
        ny: 101,
    };
    let b = compute_brown(
        &r,
        2,
        &laws,
        &grid,
        0.01,
        &EpsSchedule::default(),
        RealizationPath::Minimal,
    )
    .unwrap();
    let cloud = empirical_spectrum(
        &r,
        &ensembles_for_laws(&laws, 1000, SEED).unwrap(),
        1,
        false,
    )
    .unwrap();
    let cov = brown_coverage(&b, &cloud.pool.complex(), 0.05).unwrap();
    outcome(
        cov >= 0.9,
        format!(
            "coverage {cov:.4} (≥ 0.9), mass {:.4}, {} failed points",
            b.mass,
            b.failures.len()
        ),
    )
}

fn im(m: &MatC) -> MatC {
    (m - m.adjoint()) * C64::new(0.0, -0.5)
}

fn min_eig(m: &MatC) -> f64 {
    hermitian_eigenvalues(m)
        .unwrap()
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> MatC {
    MatC::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures: Vec<&str> = Vec::new();
    let laws = [
        semicircle(),
        Law::marchenko_pastur(1.0, 1.0).unwrap(),
        Law::atomic(vec![-1.0, 2.0], vec![0.3, 0.7]).unwrap(),
    ];
    let cfg = SubordinationConfig::default();
    let (mut half_plane, mut h_pos, mut omega, mut schur, mut herm) =
        (true, true, true, true, true);
    for t in 0..50 {
        let n = 1 + t % 3;
        let h = gaussian(&mut rng, n, n);
        let k = gaussian(&mut rng, n, n);
        let b = (&h + h.adjoint())
            + (&k * k.adjoint() + identity(n) * C64::new(0.05, 0.0)) * C64::new(0.0, 1.0);
        for law in &laws {
            let g = matricial_cauchy(law, &b).unwrap();
            half_plane &= min_eig(&(-im(&g))) >= -1e-9;
            let hx = TensorTerm::new(&identity(n), law.clone())
                .unwrap()
                .h_transform(&b)
                .unwrap();
            h_pos &= min_eig(&im(&hx)) >= -1e-9;
        }
        let lam = |rng: &mut ChaCha8Rng| {
            let a = gaussian(rng, n, n);
            &a + a.adjoint()
        };
        let x = TensorTerm::new(&lam(&mut rng), laws[0].clone()).unwrap();
        let y = TensorTerm::new(&lam(&mut rng), laws[1].clone()).unwrap();
        let s = subordinate_pair(&x, &y, &b, None, &cfg).unwrap();
        omega &= min_eig(&(im(&s.omega1) - im(&b))) >= -1e-9
            && min_eig(&(im(&s.omega2) - im(&b))) >= -1e-9;

        let m = 1 + t % 4;
        let a11 = gaussian(&mut rng, n, n) + identity(n) * C64::new(6.0, 0.0);
        let a12 = gaussian(&mut rng, n, m);
        let a21 = gaussian(&mut rng, m, n);
        let a22 = gaussian(&mut rng, m, m) + identity(m) * C64::new(6.0, 0.0);
        let inv = schur_inverse(&a11, &a12, &a21, &a22).unwrap();
        schur &= max_norm(&(inv * block2(&a11, &a12, &a21, &a22) - identity(n + m))) <= 1e-10;

        let a = gaussian(&mut rng, n, m);
        let mut eig = hermitian_eigenvalues(&block2(
            &MatC::zeros(n, n),
            &a,
            &a.adjoint(),
            &MatC::zeros(m, m),
        ))
        .unwrap();
        eig.sort_by(f64::total_cmp);
        let mut pm: Vec<f64> = singular_values(&a).iter().flat_map(|&s| [s, -s]).collect();
        pm.resize(n + m, 0.0);
        pm.sort_by(f64::total_cmp);
        herm &= eig.iter().zip(&pm).all(|(u, v)| (u - v).abs() <= 1e-8);
    }
    for (ok, name) in [
        (half_plane, "half-plane"),
        (h_pos, "h-positivity"),
        (omega, "ω-monotonicity"),
        (schur, "Schur"),
        (herm, "hermitization"),
    ] {
        if !ok {
            failures.push(name);
        }
    }

    let mut ranks = true;
    let mut seed = SEED;
    let mut count = 0;
    while count < 50 {
        seed += 1;
        let r = random_expr(
            &mut ChaCha8Rng::seed_from_u64(seed),
            &RandomExprConfig::new(4, 2),
        );
        if value_at_zero(&r).is_err() {
            continue;
        }
        count += 1;
        let min = cut_down(&realize_regular(&build_flr(&r, 2).unwrap()).unwrap());
        ranks &=
            rank(&controllable_space(&min)) == min.dim() && unobservable_space(&min).ncols() == 0;
    }
    if !ranks {
        failures.push("cut-down ranks");
    }

    let minimal = |s: &str| {
        cut_down(&realize_regular(&build_flr(&parse_expr(s, 2).unwrap(), 2).unwrap()).unwrap())
    };
    let (r1, r2) = (minimal("x1*inv(1 - x2*x1)"), minimal("inv(1 - x1*x2)*x1"));
    let similar = match check_similarity(&r1, &r2) {
        Ok(Some(s)) => similarity_residual(&r1, &r2, &s) <= 1e-8 * (1.0 + max_norm(&s)),
        _ => false,
    };
    if !similar {
        failures.push("similarity");
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "half-plane, h-positivity, ω-monotonicity, Schur, hermitization, cut-down ranks, similarity".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "FLR soundness sweep", flr_soundness),
        (2, "realization series oracle", realization_series),
        (3, "reference pencils", fixtures),
        (4, "subordination exactness", subordination),
        (5, "distribution of x1", identity_distribution),
        (6, "anticommutator vs Wishart+GUE", anticommutator),
        (7, "rational expression vs GUE", rational_distribution),
        (8, "circular element Brown measure", circular_element),
        (
            9,
            "rational Brown measure vs eigenvalue cloud",
            rational_brown,
        ),
        (10, "invariant suites", invariants),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} [{id:>2}] {name}: {} ({secs:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
