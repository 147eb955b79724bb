use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the zero vector has no canonical lattice representative")]
    ZeroIndex,
    #[error("index {0:?} is not canonical (first nonzero component must be positive)")]
    NonCanonical(Vec<i64>),
    #[error("index {index:?} lies outside the storage box |n|_inf <= {cutoff}")]
    OutsideBox { index: Vec<i64>, cutoff: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("unsupported Lebesgue exponent p = {0} (supported: 2, 3, 4, 6, inf)")]
    UnsupportedExponent(f64),
    #[error("grid with {points} points per dimension is too small: need at least {required} for bandwidth {bandwidth}")]
    GridTooSmall {
        points: usize,
        bandwidth: usize,
        required: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exponent constraint violated: {0}")]
    Constraint(String),
    #[error("sub-Gaussian bound violated at gamma = {gamma}: log mgf {log_mgf} > c gamma^2 = {bound}")]
    SubgaussianViolation { gamma: f64, log_mgf: f64, bound: f64 },
    #[error("trajectory does not carry {0}")]
    MissingData(&'static str),
    #[error("trajectory initial data does not match the supplied base state")]
    BaseMismatch,
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
