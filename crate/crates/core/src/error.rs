use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,
    /// Position is 1-based.
    #[error("observation {0} is not finite")]
    NonFiniteValue(usize),
    #[error("sample of size {n} is below the minimum of {min}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("vector {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("scan grid is empty")]
    EmptyGrid,
    #[error("scan grid must be positive and strictly increasing")]
    InvalidGrid,
    #[error("band boundary function returned a negative value {value} at b = {b}")]
    NegativePhi { b: f64, value: f64 },
    #[error("no root bracketed: {0}")]
    NoRoot(String),
    #[error("zero denominator in the estimating equation")]
    ZeroDenominator,
    #[error("no root of the optimal-band equation in (0, {b_max}]")]
    NoRootInRange { b_max: f64 },
    #[error("quadrature failed to converge on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("mixture density vanishes at x = {x} where the component densities differ")]
    DivisionBySupportGap { x: f64 },
    #[error("mixing profile never drops below {gamma}")]
    NoSuchLag { gamma: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("sample variance is zero")]
    DegenerateVariance,
    #[error("calibration produced a non-positive threshold {0}")]
    DegenerateCalibration(f64),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}
