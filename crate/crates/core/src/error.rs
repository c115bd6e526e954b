use std::fmt;

use thiserror::Error;

use crate::linalg::ComplexMatrix;
use crate::state::IncoherentState;

/// One violated density-matrix invariant together with its residual.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityViolation {
    /// Largest entry of `|M - M^dagger|`.
    NotHermitian { residual: f64 },
    /// The trace as computed (real part) and its distance from 1.
    NotUnitTrace { trace: f64, residual: f64 },
    /// Most negative eigenvalue of the Hermitian part.
    NotPsd { min_eigenvalue: f64 },
}

impl fmt::Display for DensityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityViolation::NotHermitian { residual } => {
                write!(f, "not Hermitian (max |M - M^dagger| = {residual:e})")
            }
            DensityViolation::NotUnitTrace { trace, residual } => {
                write!(f, "trace {trace} differs from 1 by {residual:e}")
            }
            DensityViolation::NotPsd { min_eigenvalue } => {
                write!(f, "not positive semidefinite (min eigenvalue {min_eigenvalue:e})")
            }
        }
    }
}

/// Every invariant a candidate density matrix failed.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRejection {
    pub violations: Vec<DensityViolation>,
}

impl DensityRejection {
    pub fn has_not_hermitian(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, DensityViolation::NotHermitian { .. }))
    }

    pub fn has_not_unit_trace(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, DensityViolation::NotUnitTrace { .. }))
    }

    pub fn has_not_psd(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, DensityViolation::NotPsd { .. }))
    }
}

impl fmt::Display for DensityRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry count {len} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("matrix or vector contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("Hermitian eigensolver exceeded {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(DensityRejection),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("weights are not a probability vector: {0}")]
    NotProbabilityVector(String),

    #[error("instrument has no Kraus operators")]
    EmptyInstrument,

    #[error("instrument is incomplete (max |sum K^dagger K - 1| = {max_residual:e})")]
    IncompleteInstrument {
        residual: ComplexMatrix,
        max_residual: f64,
    },

    #[error(
        "Kraus operator {operator} generates coherence: column {column} is nonzero in rows {} and {}",
        rows.0,
        rows.1
    )]
    CoherenceGenerating {
        operator: usize,
        column: usize,
        rows: (usize, usize),
    },

    #[error("non-selective application requires every Kraus operator to share one output dimension")]
    MixedOutputDims,

    #[error(
        "simplex optimizer stopped after {iterations} iterations with certificate gap {residual:e} (value {value})"
    )]
    OptimizerDidNotConverge {
        best: IncoherentState,
        value: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("rank {rank} is not in 1..={dim}")]
    InvalidRank { dim: usize, rank: usize },

    #[error("invalid distillation spec: {0}")]
    InvalidSpec(String),

    #[error("matrix is not unitary (max |U^dagger U - 1| = {0:e})")]
    NotUnitary(f64),

    #[error("source support {source_support} is smaller than target support {target_support}")]
    SupportTooSmall {
        source_support: usize,
        target_support: usize,
    },

    #[error("conversion is degenerate: target has no weight on the aligned source support")]
    ZeroOverlapDegenerate,

    #[error("invalid campaign config: {0}")]
    InvalidConfig(String),

    #[error("counterexample parameters are not normalized (|alpha|^2 + |beta|^2 = {0})")]
    NotNormalizedParams(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
