//! JSON file formats. Complex numbers are `[re, im]` pairs; matrices are
//! lists of rows.

use serde::{Deserialize, Serialize};

use crate::channel::{validate_instrument, IncoherentInstrument};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::{validate_density, DensityMatrix, StateVector};

pub type Entry = [f64; 2];

fn to_entry(z: C64) -> Entry {
    [z.re, z.im]
}

fn from_entry(e: &Entry) -> C64 {
    C64::new(e[0], e[1])
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<Entry>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| to_entry(m[(i, j)])).collect())
        .collect()
}

fn matrix_of(rows: usize, cols: usize, data: &[Vec<Entry>]) -> Result<ComplexMatrix> {
    let len: usize = data.iter().map(Vec::len).sum();
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch { rows, cols, len });
    }
    ComplexMatrix::new(rows, cols, data.iter().flatten().map(from_entry).collect())
}

/// `{"dim": d, "matrix": [[[re, im], ...], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: Vec<Vec<Entry>>,
}

impl StateFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self {
            dim: rho.dim(),
            matrix: rows_of(rho.matrix()),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        matrix_of(self.dim, self.dim, &self.matrix)
    }

    /// Parses and validates.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        validate_density(&self.to_matrix()?)
    }
}

/// `{"rows": r, "cols": c, "matrix": [...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<Vec<Entry>>,
}

impl OperatorFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            matrix: rows_of(m),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        matrix_of(self.rows, self.cols, &self.matrix)
    }
}

/// `{"kraus": [operator, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub kraus: Vec<OperatorFile>,
}

impl ChannelFile {
    pub fn from_instrument(phi: &IncoherentInstrument) -> Self {
        Self {
            kraus: phi
                .ops()
                .iter()
                .map(|k| OperatorFile::from_matrix(k.matrix()))
                .collect(),
        }
    }

    pub fn to_matrices(&self) -> Result<Vec<ComplexMatrix>> {
        self.kraus.iter().map(OperatorFile::to_matrix).collect()
    }

    /// Parses and validates.
    pub fn to_instrument(&self) -> Result<IncoherentInstrument> {
        validate_instrument(self.to_matrices()?)
    }
}

/// `{"dim": d, "vector": [[re, im], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFile {
    pub dim: usize,
    pub vector: Vec<Entry>,
}

impl VectorFile {
    pub fn from_state(psi: &StateVector) -> Self {
        Self {
            dim: psi.dim(),
            vector: psi.amplitudes().iter().map(|&z| to_entry(z)).collect(),
        }
    }

    pub fn to_state(&self) -> Result<StateVector> {
        if self.vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                rows: self.dim,
                cols: 1,
                len: self.vector.len(),
            });
        }
        StateVector::new(self.vector.iter().map(from_entry).collect())
    }
}
