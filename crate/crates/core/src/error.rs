use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The QCRB is 1/(v·F); with zero Fisher information it is unbounded.
    #[error("QCRB is unbounded: quantum Fisher information is zero")]
    UnboundedQcrb,

    #[error("invalid moment set: {0}")]
    InvalidMoments(String),

    #[error(
        "truncation leakage {leakage:e} exceeds budget {budget:e} at n_max = {n_max}; need n_max >= {required_n_max}"
    )]
    Truncation {
        leakage: f64,
        budget: f64,
        n_max: usize,
        required_n_max: usize,
    },

    #[error("singular discretization: prior vanishes on [{start}, {end}]")]
    SingularDiscretization { start: f64, end: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid variational problem: {0}")]
    InvalidProblem(String),

    #[error("outcome model `{label}` not normalized at x = {x}: sum = {sum}")]
    Normalization { label: String, x: f64, sum: f64 },

    #[error("quadrature did not converge: refinement changed the value by {delta:e} (tolerance {tolerance:e})")]
    QuadratureNotConverged { delta: f64, tolerance: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("invalid POVM element: {0}")]
    InvalidEffect(String),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("unsupported for this Fock space: {0}")]
    WrongSpace(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("ordering violated at sweep value {sweep_value}: {detail}")]
    OrderingViolation { sweep_value: f64, detail: String },

    #[error("at sweep value {sweep_value}")]
    AtSweepPoint {
        sweep_value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("nothing to plot")]
    EmptyRows,

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain { name, value, reason }
}
