use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("index out of range: {0}")]
    BadIndex(String),
    #[error("sI - A is singular at s = {re} + {im}j")]
    SingularAtS { re: f64, im: f64 },
    #[error("bad time grid: {0}")]
    BadGrid(String),
    #[error("resistance must be positive, got {0}")]
    NonPositiveR(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid operating point: {0}")]
    InvalidOperatingPoint(String),
    #[error("infeasible operating point: {0}")]
    InfeasiblePoint(String),
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("block has no control input")]
    NoControlInput,
    #[error("direct feedthrough to v_out is not negligible: {0}")]
    FeedthroughNotNegligible(f64),
    #[error("ill-posed series connection: 1 + D11_L*D22_S = {0}")]
    IllPosedConnection(f64),
    #[error("input admittance is zero at s = {re} + {im}j")]
    ZeroAdmittance { re: f64, im: f64 },
    #[error("block is not asymptotically stable (max Re(pole) = {0})")]
    UnstableBlock(f64),
}
