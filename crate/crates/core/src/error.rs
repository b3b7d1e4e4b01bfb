use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice index ({i}, {j}) violates i = j (mod 2)")]
    InvalidIndex { i: i64, j: i64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("point lies on or below the projection horizon (z = {0})")]
    BelowHorizon(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lattice sum does not converge: {0}")]
    Convergence(String),

    #[error("cardinality mismatch: {satellites} satellites vs {terminals} terminals")]
    Cardinality { satellites: usize, terminals: usize },

    #[error("{m} is not a hexagonal reuse number m^2+mn+n^2; nearest valid values are {below:?} and {above}")]
    InvalidReuse { m: u32, below: Option<u32>, above: u32 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
