//! JSON and CSV formats for laws, pencils, representations, realizations
//! and pipeline grids.
//!
//! Matrices are `{rows, cols, entries}` with `entries` a row-major list of
//! `[re, im]` pairs. CSV floats carry 17 significant digits.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::{BrownGrid, DensityGrid};
use crate::error::{Error, Result};
use crate::freeprob::{Law, LawKind};
use crate::linalg::{c, MatC};
use crate::linrep::{Flr, LinearPencil, SaFlr};
use crate::ncexpr::{SeriesTable, Verdict};
use crate::realization::Realization;
use crate::rmt::{read_pool, Pool};

/// Scientific notation with 17 significant digits; round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LawSpec {
    Semicircle {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        variance: f64,
    },
    MarchenkoPastur {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Atomic {
        atoms: Vec<f64>,
        weights: Vec<f64>,
    },
    Empirical {
        samples_file: String,
    },
}

fn one() -> f64 {
    1.0
}

impl LawSpec {
    /// Builds the law; `samples_file` is resolved against `base`.
    pub fn to_law(&self, base: &Path) -> Result<Law> {
        match self {
            LawSpec::Semicircle { mean, variance } => Law::semicircle(*mean, *variance),
            LawSpec::MarchenkoPastur { lambda, scale } => Law::marchenko_pastur(*lambda, *scale),
            LawSpec::Atomic { atoms, weights } => Law::atomic(atoms.clone(), weights.clone()),
            LawSpec::Empirical { samples_file } => {
                let path = base.join(samples_file);
                let file = std::fs::File::open(&path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                match read_pool(file)? {
                    Pool::Real(v) => Law::empirical(v),
                    Pool::Complex(_) => {
                        Err(Error::InvalidLaw("empirical samples must be real".into()))
                    }
                }
            }
        }
    }

    /// Serialized law; empirical samples are referenced by `samples_file`.
    pub fn from_law(law: &Law, samples_file: &str) -> Self {
        match law.kind() {
            LawKind::Semicircle { mean, variance } => LawSpec::Semicircle {
                mean: *mean,
                variance: *variance,
            },
            LawKind::MarchenkoPastur { lambda, scale } => LawSpec::MarchenkoPastur {
                lambda: *lambda,
                scale: *scale,
            },
            LawKind::Atomic { atoms, weights } => LawSpec::Atomic {
                atoms: atoms.clone(),
                weights: weights.clone(),
            },
            LawKind::Empirical { .. } => LawSpec::Empirical {
                samples_file: samples_file.into(),
            },
        }
    }
}

/// Parses one law object or an array of them.
pub fn parse_laws(json: &str, base: &Path) -> Result<Vec<Law>> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let specs: Vec<LawSpec> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    specs.iter().map(|s| s.to_law(base)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&MatC> for MatrixJson {
    fn from(m: &MatC) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

impl MatrixJson {
    pub fn to_mat(&self) -> Result<MatC> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(MatC::from_fn(self.rows, self.cols, |i, j| {
            let [a, b] = self.entries[i * self.cols + j];
            c(a, b)
        }))
    }
}

/// `Q⁽⁰⁾ + Σ Q⁽ʲ⁾xⱼ` with `coeffs[j]` the row-major `[re, im]` entries of `Q⁽ʲ⁾`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilJson {
    pub arity: usize,
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

impl From<&LinearPencil> for PencilJson {
    fn from(p: &LinearPencil) -> Self {
        PencilJson {
            arity: p.arity(),
            rows: p.rows(),
            cols: p.cols(),
            coeffs: p
                .coeffs()
                .iter()
                .map(|m| MatrixJson::from(m).entries)
                .collect(),
        }
    }
}

impl PencilJson {
    pub fn to_pencil(&self) -> Result<LinearPencil> {
        if self.coeffs.len() != self.arity + 1 {
            return Err(Error::Format(format!(
                "{} coefficients for arity {}",
                self.coeffs.len(),
                self.arity
            )));
        }
        let mats = self
            .coeffs
            .iter()
            .map(|e| {
                MatrixJson {
                    rows: self.rows,
                    cols: self.cols,
                    entries: e.clone(),
                }
                .to_mat()
            })
            .collect::<Result<Vec<_>>>()?;
        LinearPencil::new(mats)
    }
}

/// `r = −u Q(x)⁻¹ v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlrJson {
    pub arity: usize,
    pub size: usize,
    pub u: MatrixJson,
    pub q: PencilJson,
    pub v: MatrixJson,
}

impl From<&Flr> for FlrJson {
    fn from(f: &Flr) -> Self {
        FlrJson {
            arity: f.arity(),
            size: f.size(),
            u: (&f.u).into(),
            q: (&f.q).into(),
            v: (&f.v).into(),
        }
    }
}

impl From<&SaFlr> for FlrJson {
    fn from(f: &SaFlr) -> Self {
        FlrJson {
            arity: f.arity(),
            size: f.size(),
            u: (&f.v.adjoint()).into(),
            q: (&f.q).into(),
            v: (&f.v).into(),
        }
    }
}

impl FlrJson {
    pub fn to_flr(&self) -> Result<Flr> {
        Flr::new(self.u.to_mat()?, self.q.to_pencil()?, self.v.to_mat()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationFlags {
    pub monic: bool,
    pub selfadjoint: bool,
}

/// `D + C(J − L_A(x))⁻¹B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationJson {
    pub arity: usize,
    pub dim: usize,
    pub d: MatrixJson,
    pub c: MatrixJson,
    pub j: MatrixJson,
    pub a: Vec<MatrixJson>,
    pub b: MatrixJson,
    pub flags: RealizationFlags,
}

impl From<&Realization> for RealizationJson {
    fn from(r: &Realization) -> Self {
        RealizationJson {
            arity: r.arity(),
            dim: r.dim(),
            d: (&r.d).into(),
            c: (&r.c).into(),
            j: (&r.j).into(),
            a: r.a.iter().map(MatrixJson::from).collect(),
            b: (&r.b).into(),
            flags: RealizationFlags {
                monic: r.is_monic(),
                selfadjoint: r.is_selfadjoint(1e-10),
            },
        }
    }
}

impl RealizationJson {
    pub fn to_realization(&self) -> Result<Realization> {
        let a = self
            .a
            .iter()
            .map(MatrixJson::to_mat)
            .collect::<Result<Vec<_>>>()?;
        Realization::new(
            self.d.to_mat()?,
            self.c.to_mat()?,
            self.j.to_mat()?,
            a,
            self.b.to_mat()?,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub word: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// Every word up to the table degree, shortest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub arity: usize,
    pub degree: usize,
    pub coeffs: Vec<SeriesTerm>,
}

impl From<&SeriesTable> for SeriesJson {
    fn from(s: &SeriesTable) -> Self {
        let coeffs = SeriesTable::words(s.arity(), s.degree())
            .into_iter()
            .map(|w| {
                let z = s.coeff(&w);
                SeriesTerm {
                    word: w,
                    re: z.re,
                    im: z.im,
                }
            })
            .collect();
        SeriesJson {
            arity: s.arity(),
            degree: s.degree(),
            coeffs,
        }
    }
}

pub fn verdict_json(v: &Verdict) -> serde_json::Value {
    match v {
        Verdict::Equivalent { samples } => {
            serde_json::json!({"verdict": v.label(), "samples": samples})
        }
        Verdict::Distinguished { witness, deviation } => serde_json::json!({
            "verdict": v.label(),
            "deviation": deviation,
            "witness": witness.mats().iter().map(MatrixJson::from).collect::<Vec<_>>(),
        }),
        Verdict::Inconclusive => serde_json::json!({"verdict": v.label()}),
    }
}

/// Sidecar written next to a grid CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub epsilon: f64,
    /// Stieltjes height; absent for Brown grids.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<f64>,
    pub mass: f64,
    pub clipped_mass: f64,
    pub iterations_max_seen: usize,
    #[serde(default)]
    pub failures: usize,
    /// Brown grids only: largest accepted corner ε and imaginary residue.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub corner_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub imag_residue: Option<f64>,
}

impl From<&DensityGrid> for GridMeta {
    fn from(d: &DensityGrid) -> Self {
        GridMeta {
            epsilon: d.epsilon,
            eta: Some(d.eta),
            mass: d.mass,
            clipped_mass: d.clipped_mass,
            iterations_max_seen: d.iterations_max_seen,
            failures: d.failures.len(),
            corner_epsilon: None,
            imag_residue: None,
        }
    }
}

impl From<&BrownGrid> for GridMeta {
    fn from(b: &BrownGrid) -> Self {
        GridMeta {
            epsilon: b.epsilon,
            eta: None,
            mass: b.mass,
            clipped_mass: b.clipped_mass,
            iterations_max_seen: b.iterations_max_seen,
            failures: b.failures.len(),
            corner_epsilon: Some(b.corner_epsilon),
            imag_residue: Some(b.imag_residue),
        }
    }
}

/// `t,density`; failed points are written as `NaN`.
pub fn write_density_csv<W: Write>(w: W, d: &DensityGrid) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "density"])?;
    for (t, f) in d.t.iter().zip(&d.density) {
        out.write_record([fmt_f64(*t), fmt_f64(*f)])?;
    }
    out.flush()?;
    Ok(())
}

/// `x,y,density`, x varying fastest.
pub fn write_brown_csv<W: Write>(w: W, b: &BrownGrid) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "density"])?;
    let (xs, ys) = (b.grid.xs(), b.grid.ys());
    for (iy, y) in ys.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            out.write_record([fmt_f64(*x), fmt_f64(*y), fmt_f64(b.at(ix, iy))])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a `t,density` file back into `(t, density)`.
pub fn read_density_csv<R: std::io::Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let (mut t, mut f) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("{s:?}: {e}")))
        };
        t.push(parse(&rec[0])?);
        f.push(parse(&rec[1])?);
    }
    Ok((t, f))
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}
