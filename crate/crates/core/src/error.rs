use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 1..=3)")]
    UnsupportedDimension(usize),
    #[error("grid needs at least one interior point per axis")]
    EmptyGrid,
    #[error("axis index {axis} out of range for dimension {dim}")]
    InvalidAxis { axis: usize, dim: usize },
    #[error("mesh mismatch: expected {expected}, found {found}")]
    MeshMismatch { expected: String, found: String },
    #[error("mesh {mesh} cannot be shifted along axis {axis}")]
    NotShiftable { mesh: String, axis: usize },
    #[error("value vector has length {found}, mesh holds {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("point {0} is not on the requested mesh")]
    PointNotOnMesh(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("weight assumption violated: {0}")]
    WeightAssumption(String),
    #[error("time {0} outside [0, T]")]
    TimeOutOfRange(f64),
    #[error("quadrature did not converge (last relative change {0:e})")]
    QuadratureNonConvergence(f64),
    #[error("diffusion coefficient {value} is not positive at t = {t}, x = {location}")]
    NonPositiveDiffusion { t: f64, location: String, value: f64 },
    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:e}")]
    LinearSolverNonConvergence { iterations: usize, residual: f64 },
    #[error("non-finite value in step {step}")]
    NonFinite { step: usize },
    #[error("time derivatives of the coefficients are required but were not provided")]
    MissingTimeDerivatives,
    #[error("source time derivative is required but was not provided")]
    MissingSourceDerivative,
    #[error("time {0} does not coincide with a frame of the time grid")]
    NotOnTimeGrid(f64),
    #[error("observation region contains no primal point")]
    EmptyRegion,
    #[error("trajectory does not solve the stated system (relative residual {0:e})")]
    TrajectoryMismatch(f64),
    #[error("source certification failed at t = {t}, x = {location}: {reason}")]
    Certification { t: f64, location: String, reason: String },
    #[error("weight parameters are outside the admissible region: {0}")]
    Inadmissible(String),
    #[error("iteration stagnated after {iterations} iterations (relative residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("coefficient mask is empty (no |y| >= {0})")]
    EmptyMask(f64),
}
