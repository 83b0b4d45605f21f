use thiserror::Error;

/// Every failure the library can report.
///
/// Variants carry enough payload to be rendered as a machine-readable JSON
/// object by the command-line front end; [`Error::module`] names the owning
/// module.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    // linalg
    #[error("singular block: {0}")]
    SingularBlock(String),
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,
    #[error("non-finite matrix entry")]
    NonFinite,

    // ncexpr
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("variable x{index} exceeds arity {arity}")]
    Arity { index: usize, arity: usize },
    #[error("point outside the domain: inverse at {path} is singular")]
    Domain { path: String },
    #[error("expression not regular at zero: inverse at {path}")]
    NotRegularAtZero { path: String },

    // linrep / realization
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("constant coefficient Q0 is singular")]
    SingularQ0,
    #[error("M0 is not a signature matrix (deviation {deviation:e})")]
    NotSignature { deviation: f64 },
    #[error("state dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    // freeprob
    #[error("resolvent nearly singular at t = {t}")]
    NearSingularResolvent { t: f64 },
    #[error("Cauchy transform value is singular")]
    SingularG,
    #[error("fixed point iteration did not converge after {iterations} steps (last delta {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    // algorithms
    #[error("pencil input is not selfadjoint: {0}")]
    NotSelfadjointInput(String),
    #[error("boundary limit unstable, successive deltas {deltas:?}")]
    BoundaryLimitUnstable { deltas: Vec<f64> },

    // rmt
    #[error("{discarded} of {total} draws fell outside the domain")]
    DomainStarved { discarded: usize, total: usize },
    #[error("empty eigenvalue pool")]
    EmptyPool,

    // io
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl Error {
    /// Name of the module that raises this error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            SingularBlock(_) | NotHermitian { .. } | ConvergenceFailure | NonFinite => "linalg",
            Syntax { .. } | Arity { .. } | Domain { .. } | NotRegularAtZero { .. } => "ncexpr",
            ShapeMismatch(_) | SingularQ0 | NotSignature { .. } => "linrep",
            DimensionMismatch { .. } | InvalidRealization(_) => "realization",
            NearSingularResolvent { .. } | SingularG | NoConvergence { .. } | InvalidLaw(_) => {
                "freeprob"
            }
            NotSelfadjointInput(_) | BoundaryLimitUnstable { .. } => "algorithms",
            DomainStarved { .. } | EmptyPool => "rmt",
            Io(_) | Format(_) => "io",
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            SingularBlock(_) => "SingularBlock",
            NotHermitian { .. } => "NotHermitian",
            ConvergenceFailure => "ConvergenceFailure",
            NonFinite => "NonFinite",
            Syntax { .. } => "SyntaxError",
            Arity { .. } => "ArityError",
            Domain { .. } => "DomainError",
            NotRegularAtZero { .. } => "NotRegularAtZero",
            ShapeMismatch(_) => "ShapeMismatch",
            SingularQ0 => "SingularQ0",
            NotSignature { .. } => "NotSignature",
            DimensionMismatch { .. } => "DimensionMismatch",
            InvalidRealization(_) => "InvalidRealization",
            NearSingularResolvent { .. } => "NearSingularResolvent",
            SingularG => "SingularG",
            NoConvergence { .. } => "NoConvergence",
            InvalidLaw(_) => "InvalidLaw",
            NotSelfadjointInput(_) => "NotSelfadjointInput",
            BoundaryLimitUnstable { .. } => "BoundaryLimitUnstable",
            DomainStarved { .. } => "DomainStarved",
            EmptyPool => "EmptyPool",
            Io(_) => "Io",
            Format(_) => "Format",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
