use crate::solver::SolveResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("route `{route}` references unknown link `{link}`")]
    UnknownLink { route: String, link: String },
    #[error("route `{0}` has no links")]
    EmptyRoute(String),
    #[error("route `{route}` lists link `{link}` more than once")]
    DuplicateLinkInRoute { route: String, link: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("topology needs at least one link and one route")]
    EmptyTopology,
    #[error("link `{id}` has non-positive capacity {capacity}")]
    NonPositiveCapacity { id: String, capacity: f64 },
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("utility argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("total population is zero")]
    ZeroPopulation,
    #[error("route index {route}: rate 0 with positive population under a utility unbounded below at 0")]
    RateUndefined { route: usize },
    #[error("solver stopped after {iterations} iterations with residual {residual:.3e}")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Best iterate seen, so callers can inspect or report it.
        result: Box<SolveResult>,
    },
    #[error("route `{0}` has positive population but no usable capacity")]
    InfeasiblePopulation(String),
    #[error("stationarity residual does not change sign on the capacity interval; the utility's derivative range is too narrow")]
    NotBracketed,
    #[error("grid search supports at most 3 routes, got {0}")]
    TooManyRoutes(usize),
    #[error("grid resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("grid point must be positive, got {0}")]
    NonPositiveGridPoint(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{0}")]
    Parse(String),
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
