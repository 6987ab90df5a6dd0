use thiserror::Error;

use crate::spaces::IndexDomain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} is not valid in domain {domain:?}")]
    DomainMismatch { index: i64, domain: IndexDomain },

    #[error("operator acts on {op:?} but vector lives on {vector:?}")]
    IncompatibleDomains {
        op: IndexDomain,
        vector: IndexDomain,
    },

    #[error("weight at index {index} is zero")]
    ZeroWeight { index: i64 },

    #[error("weight at index {index} is not finite")]
    NonFiniteWeight { index: i64 },

    #[error("weight table has no entry for index {index}")]
    WeightOutOfTable { index: i64 },

    #[error("exponent p = {0} is outside [1, inf)")]
    InvalidExponent(f64),

    #[error("{what}: {len} exceeds the limit of {max}")]
    TooLarge {
        what: &'static str,
        len: usize,
        max: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFiniteEntries,

    #[error("operation requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("support index {index} lies outside the window [{lo}, {hi})")]
    SupportOutsideWindow { index: i64, lo: i64, hi: i64 },

    #[error("horizon {have} is too small, need at least {needed}")]
    HorizonTooSmall { needed: u64, have: u64 },

    #[error("coefficient overflow while building index {index}")]
    Overflow { index: i64 },

    #[error("point {0} is not inside the open unit disc")]
    OutsideDisc(num_complex::Complex64),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
