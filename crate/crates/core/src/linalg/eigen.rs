//! Cyclic complex Jacobi eigensolver and the spectral functions built on it.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Hermiticity tolerance accepted by [`eig_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Negative eigenvalues above this are clamped to zero.
pub const PSD_TOL: f64 = 1e-9;
/// Reconstruction tolerance promised by [`Spectrum`].
pub const RECON_TOL: f64 = 1e-10;

pub const MAX_SWEEPS: usize = 100;
/// Relative off-diagonal Frobenius norm at which the sweeps stop.
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    /// `V f(diag(lambda)) V^dagger`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            let mut acc = ZERO;
            for (k, &w) in fl.iter().enumerate() {
                if w != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * w;
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<Spectrum> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let residual = h.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian(residual));
    }
    jacobi(&h.hermitian_part())
}

/// Same as [`eig_hermitian`] but symmetrizes instead of rejecting; for
/// matrices that are Hermitian by construction (e.g. `M^dagger M`).
pub(crate) fn eig_hermitian_part(h: &ComplexMatrix) -> Result<Spectrum> {
    debug_assert!(h.is_square());
    jacobi(&h.hermitian_part())
}

fn jacobi(h: &ComplexMatrix) -> Result<Spectrum> {
    let n = h.rows();
    let mut a: Vec<C64> = h.as_slice().to_vec();
    let mut v: Vec<C64> = ComplexMatrix::identity(n).as_slice().to_vec();
    let scale = h.frobenius_norm();
    let idx = |i: usize, j: usize| i * n + j;

    let off_norm = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[idx(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let off = off_norm(&a);
        if off <= OFF_DIAGONAL_TOL * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[idx(p, p)].re;
                let aqq = a[idx(q, q)].re;
                // Skip rotations that would not change the diagonal in floating point.
                if mag <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[idx(p, q)] = ZERO;
                    a[idx(q, p)] = ZERO;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / mag;
                // J restricted to (p, q): [[c, s], [-s conj(e), c conj(e)]]
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;

                // A <- A J
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = akp * jpp + akq * jqp;
                    a[idx(k, q)] = akp * jpq + akq * jqq;
                }
                // A <- J^dagger A
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[idx(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[idx(p, q)] = ZERO;
                a[idx(q, p)] = ZERO;
                a[idx(p, p)] = C64::new(a[idx(p, p)].re, 0.0);
                a[idx(q, q)] = C64::new(a[idx(q, q)].re, 0.0);
                // V <- V J
                for k in 0..n {
                    let vkp = v[idx(k, p)];
                    let vkq = v[idx(k, q)];
                    v[idx(k, p)] = vkp * jpp + vkq * jqp;
                    v[idx(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > OFF_DIAGONAL_TOL * scale {
            return Err(Error::NoConvergence {
                sweeps: MAX_SWEEPS,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[idx(j, j)].re.total_cmp(&a[idx(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[idx(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[idx(i, order[j])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    if m.hermiticity_residual() <= 1e-14 * scale {
        let spec = eig_hermitian_part(m)?;
        return Ok(spec.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    let gram = m.adjoint().matmul(m);
    let spec = eig_hermitian_part(&gram)?;
    Ok(spec.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum())
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(p: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spec = eig_hermitian(p)?;
    let min = spec.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(spec.map(|l| l.max(0.0).sqrt()))
}

/// `max |V^dagger V - 1|`
pub fn orthonormality_residual(v: &ComplexMatrix) -> f64 {
    v.adjoint().matmul(v).max_abs_diff(&ComplexMatrix::identity(v.cols()))
}
