//! One error enum for the whole crate.
//!
//! Variants carry enough context (row index, offending value, dimension) to
//! produce a one-line diagnostic at the CLI boundary without re-deriving
//! anything from the inputs.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("row {row} sums to {sum:.17} (must be 1 within 1e-9)")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("negative entry {value:.17} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("chain is not ergodic")]
    NotErgodic,

    #[error("matrix is not symmetric (max asymmetry {defect:.3e})")]
    NotSymmetric { defect: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("truncation to {bits} bits drives diagonal of row {row} to {diagonal:.17}")]
    InfeasibleTruncation {
        bits: u32,
        row: usize,
        diagonal: f64,
    },

    #[error("no stochastic perturbation of magnitude {magnitude} found in {attempts} attempts")]
    CannotPreserveStochasticity { magnitude: f64, attempts: u32 },

    #[error("marked set is empty")]
    EmptyMarkedSet,

    #[error("marked set covers every state")]
    AllMarked,

    #[error("marked state {index} is out of range for a chain on {n} states")]
    MarkedIndexOutOfRange { index: usize, n: usize },

    #[error("leak norm {norm:.17} is saturated; hitting proxies diverge")]
    SaturatedLeak { norm: f64 },

    #[error("walk dimension {dim} exceeds the limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("spectral gap {gap:.3e} does not exceed the noise norm {noise:.3e}")]
    GapDominatedByNoise { gap: f64, noise: f64 },

    #[error("ergodicity coefficient is 1; the contraction bound is vacuous")]
    ErgodicCoefficientOne,

    #[error("empty complement: every state is marked")]
    EmptyComplement,

    #[error("stationary overlap {overlap:.3e} between steps {left} and {right} is below 1e-6")]
    OverlapTooSmall {
        left: usize,
        right: usize,
        overlap: f64,
    },

    #[error("sample target does not match the stationary distribution (tv {tv:.3e})")]
    SampleTargetMismatch { tv: f64 },

    #[error("interpolation step count must be at least 1")]
    EmptySchedule,

    #[error("noise magnitude {magnitude} outside (0, 1]")]
    InvalidMagnitude { magnitude: f64 },

    #[error("truncation width {bits} outside [2, 52] bits")]
    InvalidBits { bits: u32 },

    #[error("sampling precision {eta} outside [0, 1]")]
    InvalidEta { eta: f64 },

    #[error("sweep requires at least one trial")]
    ZeroTrials,

    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}
