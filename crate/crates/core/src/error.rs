use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: &'static str, constraint: String },
    #[error("rejection sampler gave up after {attempts} attempts")]
    SamplerExhausted { attempts: usize },
    #[error("problem size {size} exceeds the cap of {cap} ({what})")]
    SizeCap { what: &'static str, size: usize, cap: usize },
    #[error("measure weights are not compatible: {0}")]
    WeightMismatch(String),
    #[error("support escapes the grid box: {0}")]
    OutsideBox(String),
    #[error("field has nonzero mean {mean:e} (tolerance {tol:e})")]
    NonzeroMean { mean: f64, tol: f64 },
    #[error("geometry is not resolvable: {0}")]
    Unresolvable(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("point is inside the particle: |y| = {norm} < a = {radius}")]
    InteriorPoint { norm: f64, radius: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        constraint: constraint.into(),
    }
}
