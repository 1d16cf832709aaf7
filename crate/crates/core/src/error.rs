use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the sampling grid")]
    OutOfBounds { point: Vec<f64> },
    #[error("unknown builtin field `{0}`")]
    UnknownField(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coercivity bound violated at {point:?}: f = {value}, bound = {bound}")]
    CoercivityViolated { point: Vec<f64>, value: f64, bound: f64 },
    #[error("empty point set")]
    EmptyInput,
    #[error("point {0:?} is not on the boundary of the body")]
    NotOnBoundary(Vec<f64>),
    #[error("field carries no coercivity tag")]
    NotCoercive,
    #[error("grid too coarse: only {0} distinct levels")]
    GridTooCoarse(usize),
    #[error("point {0:?} is not in the convex hull of the candidates")]
    NotInHull(Vec<f64>),
    #[error("field is not level convex on the grid: f({mid:?}) = {mid_value} > max(f({a:?}), f({b:?})) = {end_value}")]
    NotLevelConvex {
        a: Vec<f64>,
        b: Vec<f64>,
        mid: Vec<f64>,
        mid_value: f64,
        end_value: f64,
    },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("no pair of target gradients brackets {0}")]
    NotBracketed(f64),
    #[error("{0:?} is not an interior point of the hull of the target gradients")]
    NotInteriorPoint(Vec<f64>),
    #[error("{0:?} lies neither in the target set nor in the interior of its hull")]
    NecessaryConditionViolated(Vec<f64>),
    #[error("the problem has no minimizer for this boundary datum")]
    VerdictWasNotExists,
    #[error("existence is undecided at this resolution: {0}")]
    VerdictUnknown(String),
    #[error("malformed mesh: {0}")]
    MalformedMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
