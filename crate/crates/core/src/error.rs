use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("range must be positive, got {0} m")]
    NonPositiveRange(f64),

    #[error("range {r} m outside [{min}, {max}] m")]
    RangeOutOfInterval { r: f64, min: f64, max: f64 },

    #[error("angle {0} rad outside [0, pi)")]
    AngleOutOfDomain(f64),

    #[error("inverse-range coordinate {0} outside [0, 2pi]")]
    InverseRangeOutOfDomain(f64),

    #[error("bessel arguments out of bounds: order {order}, x {x}")]
    BesselBounds { order: i64, x: f64 },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange { what: &'static str, index: i64, limit: i64 },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("path list is empty")]
    EmptyPaths,

    #[error("least-squares system is rank deficient (condition {cond:e}) for support {support:?}")]
    RankDeficient { cond: f64, support: Vec<(f64, f64)> },

    #[error("problem infeasible: smallest residual {residual:e} exceeds eta {eta:e}")]
    Infeasible { residual: f64, eta: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),
}
