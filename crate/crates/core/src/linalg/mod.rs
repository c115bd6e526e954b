//! Dense complex linear algebra for small dimensions.

mod eigen;
mod matrix;

pub use eigen::{
    eig_hermitian, orthonormality_residual, psd_sqrt, trace_norm, Spectrum, HERMITIAN_TOL,
    MAX_SWEEPS, OFF_DIAGONAL_TOL, PSD_TOL, RECON_TOL,
};
pub(crate) use eigen::eig_hermitian_part;
pub use matrix::{ComplexMatrix, C64, ONE, ZERO};
