use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    Nonsymmetric(f64),
    #[error("frame at point {point} leaves the box")]
    BoundaryFrame { point: usize },
    #[error("degenerate frame at point {point} (condition number {condition:e})")]
    DegenerateFrame { point: usize, condition: f64 },
    #[error("stencil point {0:?} is not on the grid")]
    StencilOutOfGrid(Vec<f64>),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("class mismatch: {0}")]
    ClassMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("corrector failure: positivity not reached with constant {constant:e} (violation {violation:e})")]
    CorrectorFailure { constant: f64, violation: f64 },
    #[error("operator is not linear (defect {defect:e})")]
    NotLinear { defect: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empty family")]
    EmptyFamily,
    #[error("quadrature failed to reach tolerance (estimate {estimate:e})")]
    Quadrature { estimate: f64 },
    #[error("every sampled point was rejected as nondifferentiable")]
    NondifferentiableEverywhereSampled,
    #[error("operator is not convex (midpoint defect {defect:e})")]
    NotConvex { defect: f64 },
    #[error("point is not in the grid: {0:?}")]
    NotInGrid(Vec<f64>),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
