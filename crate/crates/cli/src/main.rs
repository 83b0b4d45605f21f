use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ncfree::algorithms::{
    compute_brown, compute_distribution, uniform_grid, EpsSchedule, Grid2d, RealizationPath,
};
use ncfree::freeprob::Law;
use ncfree::io::{self, FlrJson, GridMeta, RealizationJson, SeriesJson};
use ncfree::linrep::{build_flr, prune_flr, realize_regular};
use ncfree::ncexpr::{matrix_equiv, parse_expr, series_expand, EquivConfig, NcExpr};
use ncfree::realization::cut_down;
use ncfree::rmt::{
    brown_coverage, compare_density, empirical_spectrum, ensembles_for_laws, presimulated_box,
    presimulated_range, write_pool,
};

const PRESIM_N: usize = 200;
const PRESIM_MARGIN: f64 = 0.1;
const DIST_POINTS: usize = 600;
const BROWN_POINTS: usize = 101;

#[derive(Parser)]
#[command(
    name = "ncfree",
    version,
    about = "Distributions of rational functions in free random variables"
)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Expression, e.g. "x1*x2 + x2*x1".
    #[arg(long, global = true)]
    expr: Option<String>,
    #[arg(long, global = true, conflicts_with = "expr")]
    expr_file: Option<PathBuf>,
    /// Number of variables; defaults to the number of laws, else the
    /// largest variable index.
    #[arg(long, global = true)]
    arity: Option<usize>,
    /// Law JSON (object or array), inline or as a file path.
    #[arg(long, global = true)]
    laws: Option<String>,
    /// dist: N or LO,HI,N. brown: N, XMIN,XMAX,YMIN,YMAX,N or
    /// XMIN,XMAX,YMIN,YMAX,NX,NY.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, global = true, default_value_t = 1e-3)]
    eta: f64,
    /// Smallest corner ε of the boundary-limit schedule.
    #[arg(long, global = true)]
    eps_final: Option<f64>,
    /// Acceptance tolerance (boundary limit, or equivalence test).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory; JSON modes print to stdout without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "saflr")]
    path: RealizationPath,
}

#[derive(Subcommand)]
enum Mode {
    /// Formal linear representation.
    Linearize {
        #[arg(long)]
        prune: bool,
    },
    /// Monic descriptor realization of an expression regular at zero.
    Realize {
        #[arg(long)]
        cut_down: bool,
    },
    /// Density of a selfadjoint expression.
    Dist,
    /// Regularized Brown measure.
    Brown {
        #[arg(long, default_value_t = 0.01)]
        brown_eps: f64,
    },
    /// Pipeline output against a random-matrix simulation.
    RmtCompare {
        /// Compare a Brown grid with a complex eigenvalue cloud.
        #[arg(long)]
        brown: bool,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Defaults to 5 for densities, 1 for Brown clouds.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 60)]
        bins: usize,
        #[arg(long, default_value_t = 0.05)]
        quantile: f64,
        #[arg(long, default_value_t = 0.01)]
        brown_eps: f64,
    },
    /// Randomized equivalence test of two expressions.
    Equiv {
        #[arg(long)]
        expr2: String,
    },
    /// Power series coefficients at zero.
    Series {
        #[arg(long, default_value_t = 6)]
        degree: usize,
    },
}

enum Failure {
    Config(String),
    Lib(ncfree::Error),
}

impl From<ncfree::Error> for Failure {
    fn from(e: ncfree::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl Failure {
    fn to_json(&self) -> serde_json::Value {
        use ncfree::Error as E;
        match self {
            Failure::Config(msg) => {
                json!({"error": "ConfigError", "module": "cli", "message": msg})
            }
            Failure::Lib(e) => {
                let payload = match e {
                    E::Syntax { position, .. } => json!({"position": position}),
                    E::Arity { index, arity } => json!({"index": index, "arity": arity}),
                    E::Domain { path } | E::NotRegularAtZero { path } => json!({"path": path}),
                    E::NoConvergence {
                        iterations,
                        last_delta,
                    } => {
                        json!({"iterations": iterations, "last_delta": last_delta})
                    }
                    E::BoundaryLimitUnstable { deltas } => json!({"deltas": deltas}),
                    E::DomainStarved { discarded, total } => {
                        json!({"discarded": discarded, "total": total})
                    }
                    E::NotHermitian { deviation } | E::NotSignature { deviation } => {
                        json!({"deviation": deviation})
                    }
                    E::DimensionMismatch { left, right } => json!({"left": left, "right": right}),
                    E::NearSingularResolvent { t } => json!({"t": t}),
                    _ => json!({}),
                };
                json!({"error": e.kind(), "module": e.module(), "message": e.to_string(), "payload": payload})
            }
        }
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", config(msg.trim()).to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(if matches!(f, Failure::Config(_)) {
                2
            } else {
                1
            })
        }
    }
}

struct Input {
    expr: NcExpr,
    arity: usize,
    laws: Vec<Law>,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn load_input(c: &Common, need_laws: bool) -> Result<Input, Failure> {
    let text = match (&c.expr, &c.expr_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => read_text(p)?.trim().to_string(),
        (None, None) => return Err(config("one of --expr or --expr-file is required")),
    };
    let laws = match &c.laws {
        Some(s) => {
            let trimmed = s.trim_start();
            if trimmed.starts_with('{') || trimmed.starts_with('[') {
                io::parse_laws(s, Path::new("."))?
            } else {
                let p = Path::new(s);
                io::parse_laws(&read_text(p)?, p.parent().unwrap_or(Path::new(".")))?
            }
        }
        None if need_laws => return Err(config("--laws is required for this mode")),
        None => Vec::new(),
    };
    let arity = match c.arity {
        Some(g) => g,
        None if !laws.is_empty() => laws.len(),
        None => parse_expr(&text, usize::MAX)?.max_var(),
    };
    if need_laws && laws.len() != arity {
        return Err(config(format!(
            "{} laws for {} variables",
            laws.len(),
            arity
        )));
    }
    let expr = parse_expr(&text, arity)?;
    Ok(Input { expr, arity, laws })
}

fn schedule(c: &Common) -> EpsSchedule {
    let mut s = EpsSchedule::default();
    if let Some(e) = c.eps_final {
        s.stop = e;
    }
    if let Some(t) = c.tol {
        s.accept = t;
    }
    s
}

fn numbers(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| config(format!("bad --grid component {p:?}")))
        })
        .collect()
}

fn count(x: f64) -> Result<usize, Failure> {
    if x >= 1.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(config(format!("grid size {x} is not a positive integer")))
    }
}

fn line_grid(c: &Common, inp: &Input) -> Result<Vec<f64>, Failure> {
    let (lo, hi, n) = match c.grid.as_deref().map(numbers).transpose()?.as_deref() {
        Some([lo, hi, n]) => (*lo, *hi, count(*n)?),
        Some([n]) => {
            let (lo, hi) =
                presimulated_range(&inp.expr, &inp.laws, PRESIM_N, c.seed, PRESIM_MARGIN)?;
            (lo, hi, count(*n)?)
        }
        None => {
            let (lo, hi) =
                presimulated_range(&inp.expr, &inp.laws, PRESIM_N, c.seed, PRESIM_MARGIN)?;
            (lo, hi, DIST_POINTS)
        }
        Some(_) => return Err(config("--grid for dist is N or LO,HI,N")),
    };
    if !(lo < hi) {
        return Err(config("empty grid range"));
    }
    Ok(uniform_grid(lo, hi, n))
}

fn plane_grid(c: &Common, inp: &Input) -> Result<Grid2d, Failure> {
    let auto = || presimulated_box(&inp.expr, &inp.laws, PRESIM_N, c.seed, PRESIM_MARGIN);
    let (b, nx, ny) = match c.grid.as_deref().map(numbers).transpose()?.as_deref() {
        None => (auto()?, BROWN_POINTS, BROWN_POINTS),
        Some([n]) => (auto()?, count(*n)?, count(*n)?),
        Some([x0, x1, y0, y1, n]) => ([*x0, *x1, *y0, *y1], count(*n)?, count(*n)?),
        Some([x0, x1, y0, y1, nx, ny]) => ([*x0, *x1, *y0, *y1], count(*nx)?, count(*ny)?),
        Some(_) => {
            return Err(config(
                "--grid for brown is N, XMIN,XMAX,YMIN,YMAX,N or XMIN,XMAX,YMIN,YMAX,NX,NY",
            ))
        }
    };
    if !(b[0] < b[1] && b[2] < b[3]) {
        return Err(config("empty grid box"));
    }
    Ok(Grid2d {
        x_min: b[0],
        x_max: b[1],
        nx,
        y_min: b[2],
        y_max: b[3],
        ny,
    })
}

fn out_dir(c: &Common) -> Result<PathBuf, Failure> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn emit<T: serde::Serialize>(c: &Common, name: &str, value: &T) -> Result<(), Failure> {
    match &c.out {
        Some(_) => {
            let file = fs::File::create(out_dir(c)?.join(name))?;
            io::write_json(file, value)?;
        }
        None => io::write_json(std::io::stdout().lock(), value)?,
    }
    Ok(())
}

/// Writes `name.csv` and `name.json` and echoes the sidecar on stdout.
fn emit_grid(
    c: &Common,
    name: &str,
    meta: &GridMeta,
    write: impl FnOnce(fs::File) -> ncfree::Result<()>,
) -> Result<(), Failure> {
    let dir = out_dir(c)?;
    write(fs::File::create(dir.join(format!("{name}.csv")))?)?;
    io::write_json(fs::File::create(dir.join(format!("{name}.json")))?, meta)?;
    io::write_json(std::io::stdout().lock(), meta)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    if let Some(w) = c.workers {
        if w == 0 {
            return Err(config("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| config(e.to_string()))?;
    }
    match &cli.mode {
        Mode::Linearize { prune } => {
            let inp = load_input(c, false)?;
            let mut rho = build_flr(&inp.expr, inp.arity)?;
            if *prune {
                rho = prune_flr(&rho);
            }
            emit(c, "flr.json", &FlrJson::from(&rho))
        }
        Mode::Realize { cut_down: cut } => {
            let inp = load_input(c, false)?;
            let mut real = realize_regular(&prune_flr(&build_flr(&inp.expr, inp.arity)?))?;
            if *cut {
                real = cut_down(&real);
            }
            emit(c, "realization.json", &RealizationJson::from(&real))
        }
        Mode::Dist => {
            let inp = load_input(c, true)?;
            let t = line_grid(c, &inp)?;
            let d = compute_distribution(
                &inp.expr,
                inp.arity,
                &inp.laws,
                &t,
                c.eta,
                &schedule(c),
                c.path,
            )?;
            emit_grid(c, "density", &GridMeta::from(&d), |f| {
                io::write_density_csv(f, &d)
            })
        }
        Mode::Brown { brown_eps } => {
            let inp = load_input(c, true)?;
            let g = plane_grid(c, &inp)?;
            let b = compute_brown(
                &inp.expr,
                inp.arity,
                &inp.laws,
                &g,
                *brown_eps,
                &schedule(c),
                c.path,
            )?;
            emit_grid(c, "brown", &GridMeta::from(&b), |f| {
                io::write_brown_csv(f, &b)
            })
        }
        Mode::RmtCompare {
            brown,
            n,
            reps,
            bins,
            quantile,
            brown_eps,
        } => {
            let inp = load_input(c, true)?;
            let ens = ensembles_for_laws(&inp.laws, *n, c.seed)?;
            let dir = out_dir(c)?;
            let metrics = if *brown {
                let g = plane_grid(c, &inp)?;
                let b = compute_brown(
                    &inp.expr,
                    inp.arity,
                    &inp.laws,
                    &g,
                    *brown_eps,
                    &schedule(c),
                    c.path,
                )?;
                io::write_brown_csv(fs::File::create(dir.join("brown.csv"))?, &b)?;
                io::write_json(
                    fs::File::create(dir.join("brown.json"))?,
                    &GridMeta::from(&b),
                )?;
                let s = empirical_spectrum(&inp.expr, &ens, reps.unwrap_or(1), false)?;
                write_pool(fs::File::create(dir.join("pool.csv"))?, &s.pool)?;
                let coverage = brown_coverage(&b, &s.pool.complex(), *quantile)?;
                json!({"coverage": coverage, "quantile": quantile, "n": n, "reps": s.total, "discarded": s.discarded})
            } else {
                let t = line_grid(c, &inp)?;
                let d = compute_distribution(
                    &inp.expr,
                    inp.arity,
                    &inp.laws,
                    &t,
                    c.eta,
                    &schedule(c),
                    c.path,
                )?;
                io::write_density_csv(fs::File::create(dir.join("density.csv"))?, &d)?;
                io::write_json(
                    fs::File::create(dir.join("density.json"))?,
                    &GridMeta::from(&d),
                )?;
                let s = empirical_spectrum(&inp.expr, &ens, reps.unwrap_or(5), true)?;
                write_pool(fs::File::create(dir.join("pool.csv"))?, &s.pool)?;
                let m = compare_density(&d, s.pool.real().unwrap_or(&[]), *bins)?;
                json!({"l1": m.l1, "ks": m.ks, "bins": bins, "n": n, "reps": s.total, "discarded": s.discarded})
            };
            io::write_json(fs::File::create(dir.join("metrics.json"))?, &metrics)?;
            io::write_json(std::io::stdout().lock(), &metrics)?;
            Ok(())
        }
        Mode::Equiv { expr2 } => {
            let inp = load_input(c, false)?;
            let arity = inp.arity.max(parse_expr(expr2, usize::MAX)?.max_var());
            let other = parse_expr(expr2, arity)?;
            let mut cfg = EquivConfig {
                seed: c.seed,
                ..Default::default()
            };
            if let Some(t) = c.tol {
                cfg.tol = t;
            }
            emit(
                c,
                "verdict.json",
                &io::verdict_json(&matrix_equiv(&inp.expr, &other, &cfg)),
            )
        }
        Mode::Series { degree } => {
            let inp = load_input(c, false)?;
            let table = series_expand(&inp.expr, inp.arity, *degree)?;
            emit(c, "series.json", &SeriesJson::from(&table))
        }
    }
}
