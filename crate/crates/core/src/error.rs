use thiserror::Error;

/// Errors raised by the numerical kernels, models and flow machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate linear-fractional map: determinant {det:e} vanishes")]
    DegenerateMap { det: f64 },
    #[error("map does not send the closed unit disk into itself (max modulus {max_modulus})")]
    NotDiskMap { max_modulus: f64 },
    #[error("quadrature failed to converge after {panels} panels (error estimate {estimate:e})")]
    NoConvergence { panels: usize, estimate: f64 },
    #[error("ODE step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("matrix exponential overflow: norm {norm:e} exceeds the squaring budget")]
    Overflow { norm: f64 },
    #[error("matrix is singular to working precision (pivot {pivot:e})")]
    SingularMatrix { pivot: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("ill-posed model: {0}")]
    IllPosed(String),
    #[error("group element a = {a}, b = {b} is outside the model's subgroup")]
    OutsideGroup { a: f64, b: f64 },
    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),
    #[error("flow denominator is nearly singular (condition {condition:e})")]
    NearSingularDenominator { condition: f64 },
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
    #[error("invalid rho: |rho| = {modulus} must be < 1")]
    InvalidRho { modulus: f64 },
    #[error("dynamic range exceeded: eigenvalues would span {span:e}")]
    DynamicRangeExceeded { span: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("operator is not dissipative (min Hermitian-part eigenvalue estimate {0:e})")]
    NotDissipative(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported deficiency indices ({0}, {1}) for this operation")]
    UnsupportedIndices(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
