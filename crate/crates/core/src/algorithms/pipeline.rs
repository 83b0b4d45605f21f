use rayon::prelude::*;
use serde::Serialize;

use super::pencil::{
    build_shifted_pencil, realize_at, realize_hermitized, RealizationPath, ShiftedPencil,
};
use crate::error::{Error, Result};
use crate::freeprob::{pencil_sum_cauchy, Law, OpValued, SubordinationConfig, TensorTerm};
use crate::linalg::{c, max_norm, zeros, MatC, C64, I};
use crate::ncexpr::NcExpr;

/// Geometric corner-ε schedule `start·2⁻ᵏ ≥ stop` with its acceptance rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsSchedule {
    pub start: f64,
    pub stop: f64,
    /// Successive extrapolated values closer than this are accepted.
    pub accept: f64,
    /// Largest change tolerated between the last two levels when `accept`
    /// is never met.
    pub unstable: f64,
    /// Levels above this ε only warm up the iteration and are never accepted.
    pub accept_below: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            start: 0.1,
            stop: 1e-7,
            accept: 1e-6,
            unstable: 1e-4,
            accept_below: f64::INFINITY,
        }
    }
}

impl EpsSchedule {
    pub fn with_stop(stop: f64) -> Self {
        EpsSchedule {
            stop,
            ..Default::default()
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.start;
        while e >= self.stop * (1.0 - 1e-12) {
            out.push(e);
            e *= 0.5;
        }
        if out.is_empty() {
            out.push(self.stop);
        }
        out
    }
}

/// A shifted pencil paired with the laws of its variables.
#[derive(Clone, Debug)]
pub struct PreparedPencil {
    lambda0: MatC,
    terms: Vec<TensorTerm>,
    corner: usize,
}

impl PreparedPencil {
    pub fn new(pencil: &ShiftedPencil, laws: &[Law]) -> Result<Self> {
        if laws.len() < pencil.arity() {
            return Err(Error::ShapeMismatch(format!(
                "{} laws for {} variables",
                laws.len(),
                pencil.arity()
            )));
        }
        let terms = (1..=pencil.arity())
            .filter(|&j| max_norm(pencil.coeff(j)) > 0.0)
            .map(|j| TensorTerm::new(pencil.coeff(j), laws[j - 1].clone()))
            .collect::<Result<_>>()?;
        Ok(PreparedPencil {
            lambda0: pencil.coeff(0).clone(),
            terms,
            corner: pencil.corner,
        })
    }

    pub fn size(&self) -> usize {
        self.lambda0.nrows()
    }

    pub fn corner(&self) -> usize {
        self.corner
    }
}

/// Outcome of an ε-limit evaluation.
#[derive(Clone, Debug)]
pub struct CornerValue {
    pub value: MatC,
    /// Smallest ε reached.
    pub epsilon: f64,
    pub iterations_max: usize,
    /// Changes between successive extrapolated values.
    pub deltas: Vec<f64>,
}

/// Corner `k × k` block of `G_{Λ̂(X)}(diag(B, iεI))` followed to `ε → 0`.
///
/// Each level is warm-started from the previous subordination point. The
/// returned value is the two-step Richardson extrapolation: `R(ε) = 2G(ε) −
/// G(2ε)` removes the `O(ε)` term and `(4R(ε) − R(2ε))/3` the `O(ε²)` term.
/// It is accepted once two successive extrapolations agree.
pub fn corner_limit(
    prep: &PreparedPencil,
    b: &MatC,
    sched: &EpsSchedule,
    cfg: &SubordinationConfig,
) -> Result<CornerValue> {
    let k = prep.corner;
    let n = prep.size();
    if b.shape() != (k, k) {
        return Err(Error::ShapeMismatch(format!(
            "corner argument {:?}, expected {k}x{k}",
            b.shape()
        )));
    }
    let levels = sched.levels();
    let mut warm: Option<MatC> = None;
    let mut prev_eps = 0.0;
    let mut prev_g: Option<MatC> = None;
    let mut prev_r: Option<MatC> = None;
    let mut prev_s: Option<MatC> = None;
    let mut deltas = Vec::new();
    let mut iterations_max = 0;
    let mut big = zeros(n, n);
    big.view_mut((0, 0), (k, k)).copy_from(b);
    for (level, &eps) in levels.iter().enumerate() {
        for i in k..n {
            big[(i, i)] = c(0.0, eps);
        }
        if let Some(w) = warm.as_mut() {
            for i in k..n {
                w[(i, i)] -= c(0.0, prev_eps - eps);
            }
        }
        let s = pencil_sum_cauchy(&prep.lambda0, &prep.terms, &big, warm.as_ref(), cfg)?;
        iterations_max = iterations_max.max(s.iterations);
        let g = s.g.view((0, 0), (k, k)).into_owned();
        warm = Some(s.omega1);
        prev_eps = eps;
        let r = match &prev_g {
            Some(p) => &g * c(2.0, 0.0) - p,
            None => g.clone(),
        };
        let s2 = match (&prev_r, level >= 2) {
            (Some(p), true) => (&r * c(4.0, 0.0) - p) / c(3.0, 0.0),
            _ => r.clone(),
        };
        if let (Some(ps), true) = (&prev_s, level >= 3) {
            let d = max_norm(&(&s2 - ps));
            deltas.push(d);
            if d < sched.accept && eps <= sched.accept_below {
                return Ok(CornerValue {
                    value: s2,
                    epsilon: eps,
                    iterations_max,
                    deltas,
                });
            }
        }
        prev_g = Some(g);
        prev_r = Some(r);
        prev_s = Some(s2);
    }
    let value = prev_s.expect("at least one level");
    match deltas.last() {
        Some(&d) if d < sched.unstable => Ok(CornerValue {
            value,
            epsilon: prev_eps,
            iterations_max,
            deltas,
        }),
        None => Ok(CornerValue {
            value,
            epsilon: prev_eps,
            iterations_max,
            deltas,
        }),
        _ => Err(Error::BoundaryLimitUnstable { deltas }),
    }
}

/// `E[(B − r(X))⁻¹]` for the function realized by `pencil`.
pub fn cauchy_of_expr(
    pencil: &ShiftedPencil,
    laws: &[Law],
    b: &MatC,
    sched: &EpsSchedule,
) -> Result<MatC> {
    let prep = PreparedPencil::new(pencil, laws)?;
    Ok(corner_limit(&prep, b, sched, &SubordinationConfig::default())?.value)
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityGrid {
    pub t: Vec<f64>,
    /// Clipped density; `NaN` where the point failed.
    pub density: Vec<f64>,
    pub eta: f64,
    pub epsilon: f64,
    pub mass: f64,
    pub clipped_mass: f64,
    pub iterations_max_seen: usize,
    pub failures: Vec<(usize, String)>,
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .filter(|(_, y)| y[0].is_finite() && y[1].is_finite())
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `−(1/π) Im G(t + iη)` clipped at zero, with the clipped mass recorded.
pub fn stieltjes_invert(t: &[f64], g: &[C64], eta: f64) -> DensityGrid {
    let raw: Vec<f64> = g.iter().map(|z| -z.im / std::f64::consts::PI).collect();
    let density: Vec<f64> = raw
        .iter()
        .map(|&d| if d.is_nan() { d } else { d.max(0.0) })
        .collect();
    let negative: Vec<f64> = raw
        .iter()
        .map(|&d| if d.is_nan() { d } else { (-d).max(0.0) })
        .collect();
    DensityGrid {
        t: t.to_vec(),
        mass: trapezoid(t, &density),
        clipped_mass: trapezoid(t, &negative),
        density,
        eta,
        epsilon: 0.0,
        iterations_max_seen: 0,
        failures: Vec::new(),
    }
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Density of the selfadjoint `r(X)` on `t_grid`, smoothed at height `eta`.
pub fn compute_distribution(
    r: &NcExpr,
    arity: usize,
    laws: &[Law],
    t_grid: &[f64],
    eta: f64,
    sched: &EpsSchedule,
    path: RealizationPath,
) -> Result<DensityGrid> {
    let pencil = build_shifted_pencil(&realize_at(r, arity, path)?)?;
    distribution_from_pencil(&pencil, laws, t_grid, eta, sched)
}

pub fn distribution_from_pencil(
    pencil: &ShiftedPencil,
    laws: &[Law],
    t_grid: &[f64],
    eta: f64,
    sched: &EpsSchedule,
) -> Result<DensityGrid> {
    if pencil.corner != 1 {
        return Err(Error::ShapeMismatch(format!(
            "density needs a scalar function, corner is {}",
            pencil.corner
        )));
    }
    let prep = PreparedPencil::new(pencil, laws)?;
    let cfg = SubordinationConfig::default();
    let results: Vec<Result<CornerValue>> = t_grid
        .par_iter()
        .map(|&t| corner_limit(&prep, &MatC::from_element(1, 1, c(t, eta)), sched, &cfg))
        .collect();
    let mut g = Vec::with_capacity(t_grid.len());
    let mut failures = Vec::new();
    let mut epsilon: f64 = 0.0;
    let mut iterations = 0;
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => {
                epsilon = epsilon.max(v.epsilon);
                iterations = iterations.max(v.iterations_max);
                g.push(v.value[(0, 0)]);
            }
            Err(e) => {
                failures.push((i, e.to_string()));
                g.push(c(f64::NAN, f64::NAN));
            }
        }
    }
    let mut grid = stieltjes_invert(t_grid, &g, eta);
    grid.epsilon = epsilon;
    grid.iterations_max_seen = iterations;
    grid.failures = failures;
    Ok(grid)
}

/// Rectangular grid in the complex plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid2d {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl Grid2d {
    pub fn square(half_width: f64, n: usize) -> Self {
        Grid2d {
            x_min: -half_width,
            x_max: half_width,
            nx: n,
            y_min: -half_width,
            y_max: half_width,
            ny: n,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        uniform_grid(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        uniform_grid(self.y_min, self.y_max, self.ny)
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx.max(2) - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny.max(2) - 1) as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BrownGrid {
    pub grid: Grid2d,
    /// Row-major over `(y, x)`: index `iy * nx + ix`.
    pub density: Vec<f64>,
    pub epsilon: f64,
    pub mass: f64,
    pub clipped_mass: f64,
    /// Largest `|Im ∂_z̄ G|/π`, which vanishes for the exact transform.
    pub imag_residue: f64,
    /// Largest corner ε at which a point was accepted.
    pub corner_epsilon: f64,
    pub iterations_max_seen: usize,
    pub failures: Vec<(usize, String)>,
}

impl BrownGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.density[iy * self.grid.nx + ix]
    }

    /// Mass of the cells whose centres satisfy `pred`.
    pub fn mass_where(&self, pred: impl Fn(f64, f64) -> bool) -> f64 {
        let (xs, ys) = (self.grid.xs(), self.grid.ys());
        let cell = self.grid.hx() * self.grid.hy();
        let mut m = 0.0;
        for (iy, &y) in ys.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                let d = self.at(ix, iy);
                if d.is_finite() && pred(x, y) {
                    m += d * cell;
                }
            }
        }
        m
    }
}

/// Ratio between the corner ε and the Brown regularization ε.
pub const CORNER_EPS_RATIO: f64 = 1e-3;

/// Schedule for the corner limit inside a Brown computation: no value is
/// accepted before the corner ε drops to `CORNER_EPS_RATIO · eps`.
pub fn brown_schedule(eps: f64, sched: &EpsSchedule) -> EpsSchedule {
    let cap = CORNER_EPS_RATIO * eps;
    EpsSchedule {
        stop: sched.stop.min(cap),
        accept_below: sched.accept_below.min(cap),
        ..sched.clone()
    }
}

fn hermitized_argument(z: C64, eps: f64) -> MatC {
    let mut b = MatC::from_element(2, 2, I * eps);
    b[(0, 1)] = z;
    b[(1, 0)] = z.conj();
    b
}

/// Regularized Cauchy transform `G_{r,ε}(z)`: entry `(2, 1)` of
/// `E[(Λ_ε(z) − [[0, r], [r*, 0]])⁻¹]` with `Λ_ε(z) = [[iε, z], [z̄, iε]]`.
pub fn hermitized_cauchy(
    r: &NcExpr,
    arity: usize,
    laws: &[Law],
    z: C64,
    eps: f64,
    sched: &EpsSchedule,
) -> Result<C64> {
    let pencil = build_shifted_pencil(&realize_hermitized(r, arity, RealizationPath::Saflr)?)?;
    let prep = PreparedPencil::new(&pencil, laws)?;
    let v = corner_limit(
        &prep,
        &hermitized_argument(z, eps),
        &brown_schedule(eps, sched),
        &SubordinationConfig::default(),
    )?;
    Ok(v.value[(1, 0)])
}

/// Central differences inside, one-sided at the edges.
fn derivative(values: &[C64], i: usize, len: usize, stride: usize, h: f64) -> C64 {
    let at = |k: usize| values[k * stride];
    if len < 2 {
        return C64::new(0.0, 0.0);
    }
    if i == 0 {
        (at(1) - at(0)) / h
    } else if i == len - 1 {
        (at(len - 1) - at(len - 2)) / h
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    }
}

/// Regularized Brown measure density `(1/π) Re ∂_z̄ G_{r,ε}` on `grid`.
pub fn compute_brown(
    r: &NcExpr,
    arity: usize,
    laws: &[Law],
    grid: &Grid2d,
    eps: f64,
    sched: &EpsSchedule,
    path: RealizationPath,
) -> Result<BrownGrid> {
    let pencil = build_shifted_pencil(&realize_hermitized(r, arity, path)?)?;
    brown_from_pencil(&pencil, laws, grid, eps, sched)
}

pub fn brown_from_pencil(
    pencil: &ShiftedPencil,
    laws: &[Law],
    grid: &Grid2d,
    eps: f64,
    sched: &EpsSchedule,
) -> Result<BrownGrid> {
    if pencil.corner != 2 {
        return Err(Error::ShapeMismatch(format!(
            "hermitized pencil needs a 2x2 corner, got {}",
            pencil.corner
        )));
    }
    let prep = PreparedPencil::new(pencil, laws)?;
    let cfg = SubordinationConfig::default();
    let inner = brown_schedule(eps, sched);
    let (xs, ys) = (grid.xs(), grid.ys());
    let (nx, ny) = (xs.len(), ys.len());
    let points: Vec<C64> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| c(x, y)))
        .collect();
    let results: Vec<Result<CornerValue>> = points
        .par_iter()
        .map(|&z| corner_limit(&prep, &hermitized_argument(z, eps), &inner, &cfg))
        .collect();
    let mut g = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    let mut epsilon: f64 = 0.0;
    let mut iterations = 0;
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => {
                epsilon = epsilon.max(v.epsilon);
                iterations = iterations.max(v.iterations_max);
                g.push(v.value[(1, 0)]);
            }
            Err(e) => {
                failures.push((i, e.to_string()));
                g.push(c(f64::NAN, f64::NAN));
            }
        }
    }
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut density = vec![0.0; nx * ny];
    let (mut mass, mut clipped, mut residue) = (0.0, 0.0, 0.0f64);
    for iy in 0..ny {
        for ix in 0..nx {
            let dx = derivative(&g[iy * nx..], ix, nx, 1, hx);
            let dy = derivative(&g[ix..], iy, ny, nx, hy);
            let dzbar = (dx + I * dy) * 0.5 / std::f64::consts::PI;
            let d = dzbar.re;
            let idx = iy * nx + ix;
            if !d.is_finite() {
                density[idx] = f64::NAN;
                continue;
            }
            residue = residue.max(dzbar.im.abs());
            density[idx] = d.max(0.0);
            mass += d.max(0.0) * hx * hy;
            clipped += (-d).max(0.0) * hx * hy;
        }
    }
    Ok(BrownGrid {
        grid: grid.clone(),
        density,
        epsilon: eps,
        mass,
        clipped_mass: clipped,
        imag_residue: residue,
        corner_epsilon: epsilon,
        iterations_max_seen: iterations,
        failures,
    })
}

/// Checks that a Cauchy value lies in the closed lower half-plane.
pub fn in_lower_half_plane(g: &MatC, slack: f64) -> bool {
    let im = (g - g.adjoint()) * c(0.0, -0.5);
    crate::linalg::hermitian_eigenvalues(&im)
        .map(|v| v.iter().all(|&x| x <= slack))
        .unwrap_or(false)
}

impl OpValued for PreparedPencil {
    fn dim(&self) -> usize {
        self.size()
    }

    /// `G_{Λ̂(X)}(B)` on the full pencil space.
    fn cauchy(&self, b: &MatC) -> Result<MatC> {
        Ok(pencil_sum_cauchy(
            &self.lambda0,
            &self.terms,
            b,
            None,
            &SubordinationConfig::default(),
        )?
        .g)
    }
}
