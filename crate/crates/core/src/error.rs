use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("ODE step refinement exhausted: {0}")]
    NonConvergence(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("bump normalization failed: {0}")]
    NormalizationFailure(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("scattering solution does not match potential: {0}")]
    MissingScattering(String),
    #[error("geometry violation: {0}")]
    GeometryViolation(String),
    #[error("parameter outside domain: {0}")]
    DomainError(String),
    #[error("no admissible (b, s) pair; least violated: b = {b}, s = {s}, margin = {margin:e}")]
    NoAdmissiblePair { b: f64, s: f64, margin: f64 },
    #[error("momentum tail not converged: {0}")]
    TailNotConverged(String),
    #[error("gap does not dominate: {0}")]
    GapNotDominating(String),
    #[error("diluteness violated: {0}")]
    DilutenessViolation(String),
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("dimension {dim} exceeds configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("kernel sampling failed: {0}")]
    KernelSamplingError(String),
    #[error("all sampled states have vanishing excitation number")]
    DegenerateDenominator,
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
