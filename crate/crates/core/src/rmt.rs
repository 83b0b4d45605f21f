//! Random-matrix harness: ensembles, empirical spectra of rational
//! expressions, and comparisons against pipeline output.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algorithms::{BrownGrid, DensityGrid};
use crate::error::{Error, Result};
use crate::freeprob::{Law, LawKind};
use crate::linalg::{self, c, general_eigenvalues, hermitian_eigenvalues, real_part, MatC, C64};
use crate::ncexpr::{eval_expr, MatTuple, NcExpr};

#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleKind {
    /// Converges to semicircle(0, variance).
    Gue { variance: f64 },
    /// `(1/m) W W*` with `m = round(n / aspect)`.
    Wishart { aspect: f64 },
    /// `U diag(d) U*` with `U` Haar distributed. `d` holds i.i.d. samples,
    /// or the midpoint quantiles for a purely atomic law.
    FromLaw(Law),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub n: usize,
    pub seed: u64,
}

impl Ensemble {
    pub fn new(kind: EnsembleKind, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLaw(
                "ensemble dimension must be positive".into(),
            ));
        }
        match &kind {
            EnsembleKind::Gue { variance } if !(*variance >= 0.0 && variance.is_finite()) => {
                return Err(Error::InvalidLaw(format!("gue variance {variance}")));
            }
            EnsembleKind::Wishart { aspect } if !(*aspect > 0.0 && aspect.is_finite()) => {
                return Err(Error::InvalidLaw(format!("wishart aspect {aspect}")));
            }
            _ => {}
        }
        Ok(Ensemble { kind, n, seed })
    }

    pub fn gue(variance: f64, n: usize, seed: u64) -> Result<Self> {
        Self::new(EnsembleKind::Gue { variance }, n, seed)
    }

    pub fn wishart(aspect: f64, n: usize, seed: u64) -> Result<Self> {
        Self::new(EnsembleKind::Wishart { aspect }, n, seed)
    }

    pub fn from_law(law: Law, n: usize, seed: u64) -> Result<Self> {
        Self::new(EnsembleKind::FromLaw(law), n, seed)
    }

    /// Gaussian model for `law` where one exists: centered semicircles map
    /// to GUE, and `marchenko_pastur(λ, 1/λ)` to Wishart with aspect `1/λ`.
    /// Everything else is sampled through [`EnsembleKind::FromLaw`].
    pub fn for_law(law: &Law, n: usize, seed: u64) -> Result<Self> {
        match law.kind() {
            LawKind::Semicircle { mean, variance } if *mean == 0.0 => Self::gue(*variance, n, seed),
            LawKind::MarchenkoPastur { lambda, scale } if (lambda * scale - 1.0).abs() < 1e-14 => {
                Self::wishart(1.0 / lambda, n, seed)
            }
            _ => Self::from_law(law.clone(), n, seed),
        }
    }

    /// Matrix for replicate `rep` and variable slot `var`.
    pub fn sample_rep(&self, rep: u64, var: u64) -> MatC {
        sample(self, &mut stream_rng(self.seed, rep, var))
    }
}

/// Independent stream for `(seed, rep, var)`.
pub fn stream_rng(seed: u64, rep: u64, var: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((rep << 16) ^ var);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> MatC {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    MatC::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c(a * s, b * s)
    })
}

/// Draws one matrix of the ensemble. The result is exactly Hermitian.
pub fn sample<R: Rng + ?Sized>(e: &Ensemble, rng: &mut R) -> MatC {
    let n = e.n;
    match &e.kind {
        EnsembleKind::Gue { variance } => {
            let a = complex_gaussian(rng, n, n);
            real_part(&a) * linalg::re((2.0 * variance / n as f64).sqrt())
        }
        EnsembleKind::Wishart { aspect } => {
            let m = ((n as f64 / aspect).round() as usize).max(1);
            let w = complex_gaussian(rng, n, m);
            let p = linalg::matmul(&w, &w.adjoint()) * linalg::re(1.0 / m as f64);
            real_part(&p)
        }
        EnsembleKind::FromLaw(law) => {
            let d: Vec<f64> = match law.continuous_support() {
                None => atom_quantiles(law.atoms(), n),
                Some(_) => (0..n).map(|_| law.sample(rng)).collect(),
            };
            let u = linalg::qr_unitary(&complex_gaussian(rng, n, n));
            let mut ud = u.clone();
            for (j, &x) in d.iter().enumerate() {
                ud.column_mut(j).scale_mut(x);
            }
            real_part(&linalg::matmul(&ud, &u.adjoint()))
        }
    }
}

/// Midpoint quantiles `(i + ½)/n` of a purely atomic law, so an atom of
/// weight `w` appears exactly `nw` times when that is an integer.
fn atom_quantiles(atoms: &[(f64, f64)], n: usize) -> Vec<f64> {
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|a| a.1).sum();
    let mut out = Vec::with_capacity(n);
    let (mut k, mut cum) = (0, sorted[0].1 / total);
    for i in 0..n {
        let p = (i as f64 + 0.5) / n as f64;
        while p > cum && k + 1 < sorted.len() {
            k += 1;
            cum += sorted[k].1 / total;
        }
        out.push(sorted[k].0);
    }
    out
}

/// One matrix per ensemble, all drawn for replicate `rep`.
pub fn sample_tuple(ensembles: &[Ensemble], rep: u64) -> Result<MatTuple> {
    let mats = ensembles
        .iter()
        .enumerate()
        .map(|(j, e)| e.sample_rep(rep, j as u64))
        .collect();
    MatTuple::new(mats)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pool {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl Pool {
    pub fn len(&self) -> usize {
        match self {
            Pool::Real(v) => v.len(),
            Pool::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn real(&self) -> Option<&[f64]> {
        match self {
            Pool::Real(v) => Some(v),
            Pool::Complex(_) => None,
        }
    }

    /// The pool as complex numbers; real pools are embedded.
    pub fn complex(&self) -> Vec<C64> {
        match self {
            Pool::Real(v) => v.iter().map(|&x| c(x, 0.0)).collect(),
            Pool::Complex(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub pool: Pool,
    pub discarded: usize,
    pub total: usize,
}

/// Pooled eigenvalues of `r` over `reps` independent draws.
///
/// `hermitian` selects the Hermitian eigensolver on `(M + M*)/2`; otherwise
/// all eigenvalues of `M` are computed. Draws where `r` leaves its domain are
/// skipped and counted.
pub fn empirical_spectrum(
    r: &NcExpr,
    ensembles: &[Ensemble],
    reps: usize,
    hermitian: bool,
) -> Result<Spectrum> {
    r.check_arity(ensembles.len())?;
    if reps == 0 {
        return Err(Error::EmptyPool);
    }
    let draws: Vec<Result<Option<Pool>>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = sample_tuple(ensembles, rep)?;
            let m = match eval_expr(r, &x) {
                Ok(m) => m,
                Err(Error::Domain { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            Ok(Some(if hermitian {
                Pool::Real(hermitian_eigenvalues(&real_part(&m))?)
            } else {
                Pool::Complex(general_eigenvalues(&m)?)
            }))
        })
        .collect();
    let mut real = Vec::new();
    let mut cplx = Vec::new();
    let mut discarded = 0;
    for d in draws {
        match d? {
            None => discarded += 1,
            Some(Pool::Real(v)) => real.extend(v),
            Some(Pool::Complex(v)) => cplx.extend(v),
        }
    }
    if 2 * discarded > reps {
        return Err(Error::DomainStarved {
            discarded,
            total: reps,
        });
    }
    let pool = if hermitian {
        real.sort_by(f64::total_cmp);
        Pool::Real(real)
    } else {
        cplx.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Pool::Complex(cplx)
    };
    Ok(Spectrum {
        pool,
        discarded,
        total: reps,
    })
}

/// `[lo − m·w, hi + m·w]` for the pool range `[lo, hi]` of width `w`.
/// A degenerate range is widened to unit width first.
pub fn padded_range(pool: &[f64], margin: f64) -> Result<(f64, f64)> {
    let lo = pool.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::EmptyPool);
    }
    let (lo, hi) = if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let w = hi - lo;
    Ok((lo - margin * w, hi + margin * w))
}

/// One ensemble per law via [`Ensemble::for_law`]; variable `j` gets seed
/// `seed + j`.
pub fn ensembles_for_laws(laws: &[Law], n: usize, seed: u64) -> Result<Vec<Ensemble>> {
    laws.iter()
        .enumerate()
        .map(|(j, law)| Ensemble::for_law(law, n, seed.wrapping_add(j as u64)))
        .collect()
}

/// Real range for a density grid: the spectrum of one `n`-dimensional draw
/// of `r`, padded by `margin` times its width on both sides.
pub fn presimulated_range(
    r: &NcExpr,
    laws: &[Law],
    n: usize,
    seed: u64,
    margin: f64,
) -> Result<(f64, f64)> {
    let s = empirical_spectrum(r, &ensembles_for_laws(laws, n, seed)?, 1, true)?;
    padded_range(s.pool.real().unwrap_or(&[]), margin)
}

/// Box `[x_lo, x_hi] × [y_lo, y_hi]` around the eigenvalues of one draw,
/// each side padded by `margin` times the larger of the two widths.
pub fn presimulated_box(
    r: &NcExpr,
    laws: &[Law],
    n: usize,
    seed: u64,
    margin: f64,
) -> Result<[f64; 4]> {
    let s = empirical_spectrum(r, &ensembles_for_laws(laws, n, seed)?, 1, false)?;
    let z = s.pool.complex();
    let xs: Vec<f64> = z.iter().map(|w| w.re).collect();
    let ys: Vec<f64> = z.iter().map(|w| w.im).collect();
    let (x0, x1) = padded_range(&xs, 0.0)?;
    let (y0, y1) = padded_range(&ys, 0.0)?;
    let pad = margin * (x1 - x0).max(y1 - y0);
    Ok([x0 - pad, x1 + pad, y0 - pad, y1 + pad])
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensityComparison {
    pub l1: f64,
    pub ks: f64,
}

/// Cumulative integral of the piecewise-linear interpolant of a sampled
/// density. Failed grid points (NaN) are bridged linearly.
struct LinearCdf {
    t: Vec<f64>,
    f: Vec<f64>,
    cum: Vec<f64>,
}

impl LinearCdf {
    fn new(t: &[f64], f: &[f64]) -> Self {
        let (t, f): (Vec<f64>, Vec<f64>) = t
            .iter()
            .zip(f)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| (x, y.max(0.0)))
            .unzip();
        let mut cum = vec![0.0; t.len()];
        for k in 1..t.len() {
            cum[k] = cum[k - 1] + 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
        }
        LinearCdf { t, f, cum }
    }

    fn at(&self, x: f64) -> f64 {
        let n = self.t.len();
        if n == 0 || x <= self.t[0] {
            return 0.0;
        }
        if x >= self.t[n - 1] {
            return self.cum[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= x) - 1;
        let s = (x - self.t[k]) / (self.t[k + 1] - self.t[k]);
        let fx = self.f[k] + s * (self.f[k + 1] - self.f[k]);
        self.cum[k] + 0.5 * (x - self.t[k]) * (self.f[k] + fx)
    }
}

/// Histogram of `pool` against the density integrated per bin, with
/// `bins` equal bins spanning the grid.
///
/// `l1` is `Σ |p_hist − p_density|` with the histogram normalized by the
/// whole pool, so eigenvalues outside the grid count as missing mass. `ks`
/// is the sup distance between the empirical CDF and the density's CDF.
pub fn compare_density(d: &DensityGrid, pool: &[f64], bins: usize) -> Result<DensityComparison> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if bins == 0 || d.t.len() < 2 {
        return Err(Error::ShapeMismatch(
            "comparison needs bins ≥ 1 and two grid points".into(),
        ));
    }
    let cdf = LinearCdf::new(&d.t, &d.density);
    let (lo, hi) = (d.t[0], d.t[d.t.len() - 1]);
    let width = (hi - lo) / bins as f64;
    let total = pool.len() as f64;
    let mut counts = vec![0usize; bins];
    for &x in pool {
        if (lo..=hi).contains(&x) {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let l1 = (0..bins)
        .map(|b| {
            let a = lo + b as f64 * width;
            let mass = cdf.at(a + width) - cdf.at(a);
            (counts[b] as f64 / total - mass).abs()
        })
        .sum();
    let mut sorted = pool.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let fx = cdf.at(x);
        ks = ks
            .max((fx - i as f64 / total).abs())
            .max((fx - (i + 1) as f64 / total).abs());
    }
    Ok(DensityComparison { l1, ks })
}

/// Fraction of `pool` landing in grid cells whose density exceeds the
/// `q`-quantile of the positive density values. Cells are centered on the
/// grid nodes; points outside the grid do not count.
pub fn brown_coverage(b: &BrownGrid, pool: &[C64], q: f64) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut pos: Vec<f64> = b
        .density
        .iter()
        .copied()
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    if pos.is_empty() {
        return Ok(0.0);
    }
    pos.sort_by(f64::total_cmp);
    let q = q.clamp(0.0, 1.0);
    let threshold = pos[((pos.len() - 1) as f64 * q).floor() as usize];
    let g = &b.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let cell = |v: f64, lo: f64, h: f64, n: usize| -> Option<usize> {
        let k = if h > 0.0 { ((v - lo) / h).round() } else { 0.0 };
        (k >= 0.0 && k < n as f64 && (v - lo - k * h).abs() <= 0.5 * h.max(f64::MIN_POSITIVE))
            .then_some(k as usize)
    };
    let hits = pool
        .iter()
        .filter(
            |z| match (cell(z.re, g.x_min, hx, g.nx), cell(z.im, g.y_min, hy, g.ny)) {
                (Some(ix), Some(iy)) => b.at(ix, iy) > threshold,
                _ => false,
            },
        )
        .count();
    Ok(hits as f64 / pool.len() as f64)
}

/// Writes a pool as CSV with a `value` or `re,im` header.
pub fn write_pool<W: Write>(w: W, pool: &Pool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    match pool {
        Pool::Real(v) => {
            out.write_record(["value"])?;
            for x in v {
                out.write_record([crate::io::fmt_f64(*x)])?;
            }
        }
        Pool::Complex(v) => {
            out.write_record(["re", "im"])?;
            for z in v {
                out.write_record([crate::io::fmt_f64(z.re), crate::io::fmt_f64(z.im)])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a pool written by [`write_pool`].
pub fn read_pool<R: Read>(r: R) -> Result<Pool> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("{s:?}: {e}")))
    };
    match headers
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["value"] => {
            let mut v = Vec::new();
            for rec in rdr.records() {
                v.push(parse(&rec?[0])?);
            }
            Ok(Pool::Real(v))
        }
        ["re", "im"] => {
            let mut v = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                v.push(c(parse(&rec[0])?, parse(&rec[1])?));
            }
            Ok(Pool::Complex(v))
        }
        other => Err(Error::Format(format!("unexpected pool header {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_defect;

    #[test]
    fn gue_scalar_is_real_gaussian() {
        let e = Ensemble::gue(1.0, 1, 7).unwrap();
        let m = e.sample_rep(0, 0);
        assert_eq!(m[(0, 0)].im, 0.0);
    }

    #[test]
    fn samples_are_hermitian_and_reproducible() {
        let law = Law::atomic(vec![-1.0, 2.0], vec![0.5, 0.5]).unwrap();
        for e in [
            Ensemble::gue(1.0, 30, 1).unwrap(),
            Ensemble::wishart(0.5, 30, 1).unwrap(),
            Ensemble::from_law(law, 30, 1).unwrap(),
        ] {
            let a = e.sample_rep(3, 1);
            assert_eq!(hermitian_defect(&a), 0.0);
            assert_eq!(a, e.sample_rep(3, 1));
            assert_ne!(a, e.sample_rep(4, 1));
        }
    }

    #[test]
    fn constant_expression_spectrum() {
        let e = Ensemble::gue(1.0, 8, 0).unwrap();
        let s = empirical_spectrum(&NcExpr::real(3.0), &[e], 2, true).unwrap();
        assert_eq!(s.pool.len(), 16);
        assert!(s
            .pool
            .real()
            .unwrap()
            .iter()
            .all(|&x| (x - 3.0).abs() < 1e-14));
    }

    #[test]
    fn starved_domain() {
        let e = Ensemble::gue(1.0, 4, 0).unwrap();
        let r = NcExpr::inv(NcExpr::sub(NcExpr::var(1), NcExpr::var(1)));
        assert_eq!(
            empirical_spectrum(&r, &[e], 3, true).unwrap_err(),
            Error::DomainStarved {
                discarded: 3,
                total: 3
            }
        );
    }

    #[test]
    fn pool_csv_round_trip() {
        for pool in [
            Pool::Real(vec![0.1, -2.5e-300, 3.0]),
            Pool::Complex(vec![c(1.0 / 3.0, -0.7)]),
        ] {
            let mut buf = Vec::new();
            write_pool(&mut buf, &pool).unwrap();
            assert_eq!(read_pool(buf.as_slice()).unwrap(), pool);
        }
    }
}
