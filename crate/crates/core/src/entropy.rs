//! Von Neumann and relative entropy, in bits.

use crate::error::{Error, Result};
use crate::linalg::eig_hermitian_part;
use crate::state::DensityMatrix;

/// Eigenvalues at or below this count as exact zeros.
pub const ENTROPY_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig {
    pub zero_tol: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            zero_tol: ENTROPY_ZERO_TOL,
        }
    }
}

/// `-sum p log2 p` over entries above `zero_tol`.
pub fn shannon_entropy(p: &[f64], zero_tol: f64) -> f64 {
    let s: f64 = p
        .iter()
        .filter(|&&x| x > zero_tol)
        .map(|&x| -x * x.log2())
        .sum();
    s.max(0.0)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    von_neumann_entropy_with(rho, EntropyConfig::default())
}

pub fn von_neumann_entropy_with(rho: &DensityMatrix, cfg: EntropyConfig) -> Result<f64> {
    let spec = rho.spectrum()?;
    Ok(shannon_entropy(&spec.eigenvalues, cfg.zero_tol))
}

/// `S(rho || sigma) = tr rho log2 rho - tr rho log2 sigma`; `+inf` when the
/// support of `rho` is not contained in the support of `sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    relative_entropy_with(rho, sigma, EntropyConfig::default())
}

pub fn relative_entropy_with(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    cfg: EntropyConfig,
) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let neg_entropy = -von_neumann_entropy_with(rho, cfg)?;
    let spec = eig_hermitian_part(sigma.matrix())?;
    let d = rho.dim();
    let v = &spec.eigenvectors;
    let m = rho.matrix();
    let mut cross = 0.0;
    for (k, &mu) in spec.eigenvalues.iter().enumerate() {
        // <w_k| rho |w_k>
        let w = v.column(k);
        let rw = m.matvec(&w);
        let weight: f64 = (0..d).map(|i| (w[i].conj() * rw[i]).re).sum();
        if mu <= cfg.zero_tol {
            if weight > cfg.zero_tol {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * mu.log2();
    }
    Ok((neg_entropy - cross).max(0.0))
}
