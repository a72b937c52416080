use thiserror::Error;

/// Errors raised by the set-valued calculus.
///
/// Numeric payloads are reported as `f64` so the enum stays independent of
/// the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sampled function: {0}")]
    InvalidFunction(String),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("operands have different value dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("representative metadata inconsistent at node {node}: defect {defect:e}")]
    RepresentativeInconsistent { node: usize, defect: f64 },
    #[error("point {x} lies outside the domain [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },
    #[error("Lipschitz modulus must be positive, got {0}")]
    NonpositiveK(f64),
    #[error("graph distance requires continuous functions; jump set is non-empty")]
    HasJumps,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("gradient stages did not converge (gaps {gaps:?})")]
    NotConverged { gaps: Vec<f64> },
    #[error("smoothing schedule too coarse: {0}")]
    ScheduleTooCoarse(String),
    #[error("range [{lo}, {hi}] not inside the outer function domain [{a}, {b}]")]
    RangeMismatch { lo: f64, hi: f64, a: f64, b: f64 },
    #[error("{x} is not a local extremum")]
    NotAnExtremum { x: f64 },
    #[error("{x} is not a continuity point of the gradient")]
    NotAContinuityPoint { x: f64 },
    #[error("element belongs to no level of the tower")]
    NotInTower,
    #[error("tower elements have incompatible depths ({left} vs {right})")]
    DepthMismatch { left: usize, right: usize },
    #[error("sequence is not Cauchy: tail diameter {diameter:e} exceeds {tol:e}")]
    NotCauchy { diameter: f64, tol: f64 },
    #[error("precision {eps} unreachable; best distance {best}")]
    PrecisionUnreachable { eps: f64, best: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
