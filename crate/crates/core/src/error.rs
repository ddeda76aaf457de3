//! Crate error type.

use thiserror::Error;

/// Errors produced by basis construction, mapping, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("representation length {rep_len} does not match basis length {basis_len}")]
    DimensionMismatch { rep_len: usize, basis_len: usize },

    #[error("codeword {code} out of range for a {bit_depth}-bit converter")]
    CodewordOutOfRange { code: u32, bit_depth: u32 },

    #[error("basis must contain at least one weight")]
    EmptyBasis,

    #[error("weight {weight} outside the allowed range [1, {max}]")]
    WeightOutOfRange { weight: u32, max: u64 },

    #[error("bit depth {0} exceeds the supported maximum {max}", max = crate::model::MAX_BIT_DEPTH)]
    BitDepthTooLarge(u32),

    #[error("no representation exists for codeword {0} (coverage gap)")]
    CoverageGap(u32),

    #[error("basis length {len} exceeds the limit {max} for this operation")]
    BasisTooLarge { len: usize, max: usize },

    #[error("codeword {code} has {count} representations, above the cap {cap}")]
    RepSetTooLarge { code: u32, count: u64, cap: u64 },

    #[error("lookup table would need {entries} entries, above the cap {cap}; use on-the-fly greedy mapping instead")]
    LutTooLarge { entries: u64, cap: u64 },

    #[error("mapping table has no representation for codeword {0}")]
    IncompleteTable(u32),

    #[error("representation decodes to {decoded}, expected {expected}")]
    Inconsistent { decoded: u64, expected: u64 },

    #[error("input sequence is empty")]
    EmptySequence,

    #[error("invalid probability model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("measurement undefined: {0}")]
    UndefinedMeasurement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
