use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: a = {a} must be less than b = {b}")]
    InvalidInterval { a: f64, b: f64 },
    #[error("mode count must be at least 1")]
    EmptyBasis,
    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("mode count {0} exceeds the Hermite recurrence guard of 1e6")]
    TooManyModes(usize),
    #[error("mode index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("basis has a zero eigenvalue (lambda_1 = 0)")]
    ZeroEigenvalue,
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("unsupported Bessel order {0}")]
    UnsupportedOrder(f64),
    #[error("kernel is singular at the origin")]
    SingularPoint,
    #[error("no zero-mass potential in dimension 1")]
    NoZeroMassPotential,
    #[error("coefficient fields live on different bases")]
    BasisMismatch,
    #[error("times must be non-negative and strictly increasing")]
    NonIncreasingTimes,
    #[error("Euler-Maruyama step unstable: nu*lambda_K^2*dt = {0} > 0.1")]
    UnstableStep(f64),
    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },
    #[error("integrability condition violated: {0}")]
    IntegrabilityViolated(String),
    #[error("spectral floor violated: {0}")]
    FloorViolated(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}
