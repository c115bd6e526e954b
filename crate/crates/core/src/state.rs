//! States over the fixed incoherent basis.

use serde::{Deserialize, Serialize};

use crate::error::{DensityRejection, DensityViolation, Error, Result};
use crate::linalg::{eig_hermitian_part, ComplexMatrix, Spectrum, C64, ZERO};

/// Tolerance for Hermiticity, unit trace and eigenvalue positivity.
pub const DENSITY_TOL: f64 = 1e-9;

/// A certified density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps the Hermitian part of `m` without checking; for results of
    /// operations that preserve the density-matrix invariants.
    pub(crate) fn from_matrix_trusted(m: ComplexMatrix) -> Self {
        Self {
            matrix: m.hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self {
            matrix: ComplexMatrix::outer(psi.amplitudes()),
        }
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self {
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        })
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        let delta = IncoherentState::new(p.to_vec())?;
        Ok(delta.to_density())
    }

    /// Real diagonal `rho_ii`.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eig_hermitian_part(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.matrix.max_off_diagonal()
    }

    /// Convex combination `sum_k w_k rho_k`.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        check_probability_vector(weights)?;
        let d = states[0].dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
            acc = &acc + &s.matrix.scale_real(*w);
        }
        Ok(Self::from_matrix_trusted(acc))
    }

    /// Conjugation `U rho U^dagger` by a unitary (not checked).
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self::from_matrix_trusted(self.matrix.sandwich(u))
    }
}

/// Checks every density-matrix invariant and reports all failures at once.
pub fn validate_density(m: &ComplexMatrix) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let mut violations = Vec::new();
    let herm = m.hermiticity_residual();
    if herm > DENSITY_TOL {
        violations.push(DensityViolation::NotHermitian { residual: herm });
    }
    let trace = m.trace();
    let trace_residual = (trace - C64::new(1.0, 0.0)).norm();
    if trace_residual > DENSITY_TOL {
        violations.push(DensityViolation::NotUnitTrace {
            trace: trace.re,
            residual: trace_residual,
        });
    }
    let spectrum = eig_hermitian_part(m)?;
    let min = spectrum.min_eigenvalue();
    if min < -DENSITY_TOL {
        violations.push(DensityViolation::NotPsd {
            min_eigenvalue: min,
        });
    }
    if violations.is_empty() {
        Ok(DensityMatrix { matrix: m.clone() })
    } else {
        Err(Error::InvalidDensity(DensityRejection { violations }))
    }
}

/// Deletes every off-diagonal entry.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    let m = &rho.matrix;
    DensityMatrix {
        matrix: ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(m[(i, i)].re, 0.0)
            } else {
                ZERO
            }
        }),
    }
}

pub fn is_incoherent_state(rho: &DensityMatrix, tol: f64) -> bool {
    rho.max_off_diagonal() <= tol
}

/// Unit vector over the incoherent basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::InvalidDimension(d));
        }
        let mut a = vec![ZERO; d];
        a[i] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: a })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(self)
    }
}

/// A diagonal state, stored as its probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherentState {
    weights: Vec<f64>,
}

impl IncoherentState {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_probability_vector(&weights)?;
        Ok(Self { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: ComplexMatrix::from_diag(&self.weights),
        }
    }

    /// The diagonal of `rho`, with rounding-level negatives clamped to zero.
    pub fn diagonal_of(rho: &DensityMatrix) -> Self {
        Self {
            weights: rho.populations().into_iter().map(|p| p.max(0.0)).collect(),
        }
    }

    pub(crate) fn from_simplex_point(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

pub(crate) fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotProbabilityVector("empty".into()));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotProbabilityVector("non-finite entry".into()));
    }
    if let Some(x) = p.iter().find(|&&x| x < -DENSITY_TOL) {
        return Err(Error::NotProbabilityVector(format!("negative entry {x}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DENSITY_TOL {
        return Err(Error::NotProbabilityVector(format!("sum is {sum}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn plus() -> DensityMatrix {
        StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])
            .unwrap()
            .density()
    }

    pub(crate) fn appendix_f_state() -> DensityMatrix {
        let m = ComplexMatrix::from_real(
            3,
            3,
            &[0.25, 0.0, 0.25, 0.0, 0.5, 0.0, 0.25, 0.0, 0.25],
        )
        .unwrap();
        validate_density(&m).unwrap()
    }

    #[test]
    fn dephase_examples() {
        let d = dephase(&plus());
        assert!(d.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[0.5, 0.5])) < 1e-15);
        let diag = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(dephase(&diag), diag);
        let f = dephase(&appendix_f_state());
        assert!(f.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[0.25, 0.5, 0.25])) < 1e-15);
    }

    #[test]
    fn dephase_is_idempotent_and_trace_preserving() {
        let rho = appendix_f_state();
        let once = dephase(&rho);
        assert_eq!(dephase(&once), once);
        assert!((once.matrix().trace() - rho.matrix().trace()).norm() < 1e-15);
    }

    #[test]
    fn validate_accepts_maximally_mixed() {
        let m = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(validate_density(&m).is_ok());
    }

    #[test]
    fn validate_lists_every_violation() {
        // diag(2, -1) has unit trace, so only positivity fails.
        let m = ComplexMatrix::from_diag(&[2.0, -1.0]);
        match validate_density(&m) {
            Err(Error::InvalidDensity(r)) => {
                assert!(r.has_not_psd());
                assert!(!r.has_not_unit_trace());
                assert!(!r.has_not_hermitian());
            }
            other => panic!("unexpected {other:?}"),
        }
        let m = ComplexMatrix::from_diag(&[2.0, -0.5]);
        match validate_density(&m) {
            Err(Error::InvalidDensity(r)) => {
                assert!(r.has_not_unit_trace());
                assert!(r.has_not_psd());
                assert_eq!(r.violations.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_reports_negative_eigenvalue() {
        let m = ComplexMatrix::from_real(2, 2, &[0.5, 0.6, 0.6, 0.5]).unwrap();
        match validate_density(&m) {
            Err(Error::InvalidDensity(r)) => {
                assert_eq!(r.violations.len(), 1);
                match r.violations[0] {
                    DensityViolation::NotPsd { min_eigenvalue } => {
                        assert!((min_eigenvalue + 0.1).abs() < 1e-12)
                    }
                    ref v => panic!("unexpected {v:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_reports_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.5, 0.1, 0.0, 0.5]).unwrap();
        match validate_density(&m) {
            Err(Error::InvalidDensity(r)) => assert!(r.has_not_hermitian()),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            validate_density(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn incoherence_test() {
        let d = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        assert!(is_incoherent_state(&d, 1e-10));
        assert!(!is_incoherent_state(&plus(), 1e-10));
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(0.5, 0.0),
                C64::new(1e-12, 0.0),
                C64::new(1e-12, 0.0),
                C64::new(0.5, 0.0),
            ],
        )
        .unwrap();
        assert!(is_incoherent_state(&validate_density(&m).unwrap(), 1e-10));
    }

    #[test]
    fn state_vector_normalization() {
        assert!(matches!(
            StateVector::from_real(&[1.0, 1.0]),
            Err(Error::NotNormalized(_))
        ));
        let v = StateVector::normalized(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert!((v.amplitudes()[1].im - 0.8).abs() < 1e-15);
        assert!((v.density().purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn incoherent_state_validation() {
        assert!(IncoherentState::new(vec![0.5, 0.5]).is_ok());
        assert!(IncoherentState::new(vec![0.6, 0.5]).is_err());
        assert!(IncoherentState::new(vec![1.1, -0.1]).is_err());
        assert!(IncoherentState::new(vec![]).is_err());
    }
}
