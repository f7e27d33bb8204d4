use thiserror::Error;

pub type Result<T> = std::result::Result<T, SloshError>;

#[derive(Debug, Error)]
pub enum SloshError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("class violation at sample {index}: {reason}")]
    ClassViolation { index: usize, reason: String },
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("zero surface norm in Rayleigh quotient")]
    DivisionGuard,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("ill-conditioned surface mass: {0}")]
    IllConditioned(String),
    #[error("incompatible star representations: {0}")]
    IncompatibleRepresentation(String),
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid domain family: {0}")]
    InvalidFamily(String),
    #[error("unsupported mesh: {0}")]
    UnsupportedMesh(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
