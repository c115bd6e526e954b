//! Incoherent Kraus instruments and their application to states.
//!
//! A Kraus operator `K` maps every incoherent state to an incoherent state
//! exactly when each of its columns has at most one nonzero entry. For a
//! basis projector, `K |i><i| K^dagger = |k_i><k_i|` with `k_i` the i-th
//! column, and `|k_i><k_i|` is diagonal iff `k_i` has at most one nonzero
//! component. Diagonal states are convex combinations of basis projectors,
//! so the per-column condition is also sufficient for the whole set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::state::{check_probability_vector, DensityMatrix};

/// Entries at or below this magnitude count as structural zeros.
pub const INCOHERENCE_TOL: f64 = 1e-10;
/// Max-entry tolerance on `sum K^dagger K - 1`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Outcomes with probability at or below this carry no state.
pub const NULL_OUTCOME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Class (A): outcomes are discarded.
    #[serde(rename = "A")]
    NonSelective,
    /// Class (B): outcomes are recorded.
    #[serde(rename = "B")]
    Selective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    matrix: ComplexMatrix,
}

impl KrausOperator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn d_in(&self) -> usize {
        self.matrix.cols()
    }

    pub fn d_out(&self) -> usize {
        self.matrix.rows()
    }
}

/// First column with two entries above `INCOHERENCE_TOL`, as
/// `(column, (row_a, row_b))`.
pub fn column_certificate(k: &ComplexMatrix) -> Option<(usize, (usize, usize))> {
    for j in 0..k.cols() {
        let mut first = None;
        for i in 0..k.rows() {
            if k[(i, j)].norm() > INCOHERENCE_TOL {
                match first {
                    None => first = Some(i),
                    Some(r) => return Some((j, (r, i))),
                }
            }
        }
    }
    None
}

/// Direct check that `K |i><i| K^dagger` is diagonal for every basis state.
///
/// Off-diagonal magnitudes `|k_a| |k_b|` are compared with
/// `INCOHERENCE_TOL * max(INCOHERENCE_TOL, max_a |k_a|)`, which accepts
/// exactly the columns accepted by [`column_certificate`].
pub fn projector_certificate(k: &ComplexMatrix) -> Option<(usize, (usize, usize))> {
    for j in 0..k.cols() {
        let col = k.column(j);
        let image = ComplexMatrix::outer(&col);
        let largest = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = INCOHERENCE_TOL * largest.max(INCOHERENCE_TOL);
        for a in 0..k.rows() {
            for b in (a + 1)..k.rows() {
                if image[(a, b)].norm() > tol {
                    return Some((j, (a, b)));
                }
            }
        }
    }
    None
}

/// An ordered list of incoherent Kraus operators with a common input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct IncoherentInstrument {
    ops: Vec<KrausOperator>,
    mode: Mode,
}

impl IncoherentInstrument {
    pub fn ops(&self) -> &[KrausOperator] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn d_in(&self) -> usize {
        self.ops[0].d_in()
    }

    /// The common output dimension, if there is one.
    pub fn uniform_d_out(&self) -> Option<usize> {
        let d = self.ops[0].d_out();
        self.ops.iter().all(|k| k.d_out() == d).then_some(d)
    }

    /// Re-tags the instrument. Class (A) needs a common output dimension.
    pub fn with_mode(mut self, mode: Mode) -> Result<Self> {
        if mode == Mode::NonSelective && self.uniform_d_out().is_none() {
            return Err(Error::MixedOutputDims);
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn matrices(&self) -> Vec<ComplexMatrix> {
        self.ops.iter().map(|k| k.matrix.clone()).collect()
    }

    /// `sum_n K_n^dagger K_n - 1`
    pub fn completeness_residual(&self) -> ComplexMatrix {
        completeness_residual(&self.matrices())
    }
}

fn completeness_residual(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let d = ops[0].cols();
    let mut acc = ComplexMatrix::identity(d).scale_real(-1.0);
    for k in ops {
        acc = &acc + &k.adjoint().matmul(k);
    }
    acc
}

/// Accepts `ops` iff they are complete and every operator maps incoherent
/// states to incoherent states. The mode is class (A) when all outputs share
/// a dimension and class (B) otherwise.
pub fn validate_instrument(ops: Vec<ComplexMatrix>) -> Result<IncoherentInstrument> {
    if ops.is_empty() {
        return Err(Error::EmptyInstrument);
    }
    let d_in = ops[0].cols();
    for k in &ops {
        if k.cols() != d_in {
            return Err(Error::DimensionMismatch {
                expected: d_in,
                found: k.cols(),
            });
        }
    }
    for (n, k) in ops.iter().enumerate() {
        let by_column = column_certificate(k);
        let by_projector = projector_certificate(k);
        if let Some((column, rows)) = by_column.or(by_projector) {
            return Err(Error::CoherenceGenerating {
                operator: n,
                column,
                rows,
            });
        }
    }
    let residual = completeness_residual(&ops);
    let max_residual = residual.max_abs();
    if max_residual > COMPLETENESS_TOL {
        return Err(Error::IncompleteInstrument {
            residual,
            max_residual,
        });
    }
    let d_out = ops[0].rows();
    let mode = if ops.iter().all(|k| k.rows() == d_out) {
        Mode::NonSelective
    } else {
        Mode::Selective
    };
    Ok(IncoherentInstrument {
        ops: ops.into_iter().map(|matrix| KrausOperator { matrix }).collect(),
        mode,
    })
}

/// Class (A): `sum_n K_n rho K_n^dagger`.
pub fn apply_channel(phi: &IncoherentInstrument, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_input_dim(phi, rho)?;
    let d_out = phi.uniform_d_out().ok_or(Error::MixedOutputDims)?;
    let mut acc = ComplexMatrix::zeros(d_out, d_out);
    for k in phi.ops() {
        acc = &acc + &rho.matrix().sandwich(k.matrix());
    }
    Ok(DensityMatrix::from_matrix_trusted(acc))
}

fn check_input_dim(phi: &IncoherentInstrument, rho: &DensityMatrix) -> Result<()> {
    if phi.d_in() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.d_in(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// One branch of a selective measurement. `state` is `None` for null
/// outcomes (probability at or below [`NULL_OUTCOME_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub probability: f64,
    pub state: Option<DensityMatrix>,
    pub dim: usize,
}

impl MeasurementOutcome {
    pub fn new(probability: f64, state: DensityMatrix) -> Self {
        let dim = state.dim();
        Self {
            probability,
            state: Some(state),
            dim,
        }
    }

    pub fn is_null(&self) -> bool {
        self.state.is_none()
    }
}

/// Class (B): `p_n = tr K_n rho K_n^dagger`, `rho_n = K_n rho K_n^dagger / p_n`.
pub fn apply_selective(
    phi: &IncoherentInstrument,
    rho: &DensityMatrix,
) -> Result<Vec<MeasurementOutcome>> {
    check_input_dim(phi, rho)?;
    Ok(phi
        .ops()
        .iter()
        .map(|k| {
            let unnormalized = rho.matrix().sandwich(k.matrix());
            let p = unnormalized.trace().re.max(0.0);
            let state = (p > NULL_OUTCOME_TOL).then(|| {
                DensityMatrix::from_matrix_trusted(unnormalized.scale_real(1.0 / p))
            });
            MeasurementOutcome {
                probability: p,
                state,
                dim: k.d_out(),
            }
        })
        .collect())
}

/// `sum_i p_i |i><i| (x) rho_i`, flag first. Null outcomes contribute a zero block.
pub fn flag_embed(outcomes: &[MeasurementOutcome]) -> Result<DensityMatrix> {
    let first = outcomes.first().ok_or(Error::InvalidDimension(0))?;
    let d = first.dim;
    if let Some(o) = outcomes.iter().find(|o| o.dim != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: o.dim,
        });
    }
    let n = outcomes.len();
    let mut out = ComplexMatrix::zeros(n * d, n * d);
    for (i, o) in outcomes.iter().enumerate() {
        if let Some(state) = &o.state {
            let m = state.matrix();
            for a in 0..d {
                for b in 0..d {
                    out[(i * d + a, i * d + b)] = m[(a, b)] * o.probability;
                }
            }
        }
    }
    Ok(DensityMatrix::from_matrix_trusted(out))
}

/// `sum_n p_n rho_n` over non-null outcomes (uniform dimension).
pub fn recombine(outcomes: &[MeasurementOutcome]) -> Result<DensityMatrix> {
    let first = outcomes.first().ok_or(Error::InvalidDimension(0))?;
    let d = first.dim;
    let mut acc = ComplexMatrix::zeros(d, d);
    for o in outcomes {
        if o.dim != d {
            return Err(Error::MixedOutputDims);
        }
        if let Some(s) = &o.state {
            acc = &acc + &s.matrix().scale_real(o.probability);
        }
    }
    Ok(DensityMatrix::from_matrix_trusted(acc))
}

/// Checks that outcome probabilities form a probability vector.
pub fn check_outcome_probabilities(outcomes: &[MeasurementOutcome]) -> Result<()> {
    let p: Vec<f64> = outcomes.iter().map(|o| o.probability).collect();
    check_probability_vector(&p)
}

/// Projective dephasing instrument `{|i><i|}`.
pub fn dephasing_instrument(d: usize) -> IncoherentInstrument {
    let ops = (0..d)
        .map(|i| ComplexMatrix::from_fn(d, d, |a, b| if a == i && b == i { C64::new(1.0, 0.0) } else { ZERO }))
        .collect();
    validate_instrument(ops).expect("basis projectors form an incoherent instrument")
}

pub fn identity_instrument(d: usize) -> IncoherentInstrument {
    validate_instrument(vec![ComplexMatrix::identity(d)]).expect("identity is incoherent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{dephase, is_incoherent_state, validate_density, StateVector};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn appendix_f_ops(alpha: C64, beta: C64) -> Vec<ComplexMatrix> {
        let z = ZERO;
        let o = C64::new(1.0, 0.0);
        vec![
            ComplexMatrix::new(3, 3, vec![z, o, z, z, z, z, z, z, alpha]).unwrap(),
            ComplexMatrix::new(3, 3, vec![o, z, z, z, z, beta, z, z, z]).unwrap(),
        ]
    }

    fn appendix_f_state() -> DensityMatrix {
        let m = ComplexMatrix::from_real(3, 3, &[0.25, 0.0, 0.25, 0.0, 0.5, 0.0, 0.25, 0.0, 0.25])
            .unwrap();
        validate_density(&m).unwrap()
    }

    fn plus() -> DensityMatrix {
        StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])
            .unwrap()
            .density()
    }

    #[test]
    fn appendix_f_pair_is_accepted() {
        let a = C64::new(FRAC_1_SQRT_2, 0.0);
        let phi = validate_instrument(appendix_f_ops(a, a)).unwrap();
        assert_eq!(phi.len(), 2);
        assert_eq!(phi.mode(), Mode::NonSelective);
    }

    #[test]
    fn hadamard_generates_coherence() {
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, -1.0])
            .unwrap()
            .scale_real(FRAC_1_SQRT_2);
        match validate_instrument(vec![h]) {
            Err(Error::CoherenceGenerating {
                operator,
                column,
                rows,
            }) => {
                assert_eq!((operator, column, rows), (0, 0, (0, 1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_is_accepted() {
        assert!(validate_instrument(vec![ComplexMatrix::identity(3)]).is_ok());
    }

    #[test]
    fn incomplete_instrument_reports_residual() {
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        match validate_instrument(vec![half]) {
            Err(Error::IncompleteInstrument {
                residual,
                max_residual,
            }) => {
                assert!((max_residual - 0.75).abs() < 1e-15);
                assert!((residual[(0, 0)].re + 0.75).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn input_dimension_must_agree() {
        let r = validate_instrument(vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        assert!(matches!(validate_instrument(vec![]), Err(Error::EmptyInstrument)));
    }

    #[test]
    fn ragged_outputs_are_selective_only() {
        // K1 = |0><0| (1x2), K2 = |1><1| padded to 2x2.
        let k1 = ComplexMatrix::from_real(1, 2, &[1.0, 0.0]).unwrap();
        let k2 = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        let phi = validate_instrument(vec![k1, k2]).unwrap();
        assert_eq!(phi.mode(), Mode::Selective);
        assert!(matches!(
            apply_channel(&phi, &plus()),
            Err(Error::MixedOutputDims)
        ));
        assert!(matches!(
            phi.clone().with_mode(Mode::NonSelective),
            Err(Error::MixedOutputDims)
        ));
        let outcomes = apply_selective(&phi, &plus()).unwrap();
        assert_eq!(outcomes[0].dim, 1);
        assert!((outcomes[0].probability - 0.5).abs() < 1e-15);
        assert!(matches!(
            flag_embed(&outcomes),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn certificates_agree_at_threshold() {
        let tiny = ComplexMatrix::from_real(2, 1, &[1.0, 0.5e-10]).unwrap();
        assert_eq!(column_certificate(&tiny), None);
        assert_eq!(projector_certificate(&tiny), None);
        let small = ComplexMatrix::from_real(2, 1, &[1.0, 2e-10]).unwrap();
        assert!(column_certificate(&small).is_some());
        assert!(projector_certificate(&small).is_some());
    }

    #[test]
    fn identity_channel_is_trivial() {
        let rho = appendix_f_state();
        let out = apply_channel(&identity_instrument(3), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn projective_instrument_dephases() {
        let rho = appendix_f_state();
        let out = apply_channel(&dephasing_instrument(3), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(dephase(&rho).matrix()) < 1e-15);
    }

    #[test]
    fn appendix_f_channel_by_hand() {
        let a = C64::new(FRAC_1_SQRT_2, 0.0);
        let phi = validate_instrument(appendix_f_ops(a, a)).unwrap();
        let out = apply_channel(&phi, &appendix_f_state()).unwrap();
        // K1 rho K1^dagger = diag(1/2, 0, 1/8); K2 rho K2^dagger has
        // [[1/4, b*/4], [b/4, 1/8]] in the (0,1) block.
        let b = FRAC_1_SQRT_2 / 4.0;
        let expected = ComplexMatrix::from_real(
            3,
            3,
            &[0.75, b, 0.0, b, 0.125, 0.0, 0.0, 0.0, 0.125],
        )
        .unwrap();
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn appendix_f_outcome_probabilities() {
        let a = C64::new(FRAC_1_SQRT_2, 0.0);
        let phi = validate_instrument(appendix_f_ops(a, a)).unwrap();
        let outcomes = apply_selective(&phi, &appendix_f_state()).unwrap();
        assert!((outcomes[0].probability - 5.0 / 8.0).abs() < 1e-15);
        assert!((outcomes[1].probability - 3.0 / 8.0).abs() < 1e-15);
        check_outcome_probabilities(&outcomes).unwrap();
        let flagged = flag_embed(&outcomes).unwrap();
        assert_eq!(flagged.dim(), 6);
        validate_density(flagged.matrix()).unwrap();
        // Block diagonal: nothing couples the two flag sectors.
        for i in 0..3 {
            for j in 3..6 {
                assert_eq!(flagged.matrix()[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn projective_measurement_of_plus() {
        let outcomes = apply_selective(&dephasing_instrument(2), &plus()).unwrap();
        for (i, o) in outcomes.iter().enumerate() {
            assert!((o.probability - 0.5).abs() < 1e-15);
            let mut diag = [0.0, 0.0];
            diag[i] = 1.0;
            let want = ComplexMatrix::from_diag(&diag);
            assert!(o.state.as_ref().unwrap().matrix().max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn null_outcomes_carry_no_state() {
        let zero = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let outcomes = apply_selective(&dephasing_instrument(2), &zero).unwrap();
        assert!(!outcomes[0].is_null());
        assert!(outcomes[1].is_null());
        assert_eq!(outcomes[1].probability, 0.0);
        let flagged = flag_embed(&outcomes).unwrap();
        validate_density(flagged.matrix()).unwrap();
    }

    #[test]
    fn flag_embed_examples() {
        let rho = appendix_f_state();
        let single = flag_embed(&[MeasurementOutcome::new(1.0, rho.clone())]).unwrap();
        assert_eq!(single, rho);
        let outcomes = apply_selective(&dephasing_instrument(2), &plus()).unwrap();
        let flagged = flag_embed(&outcomes).unwrap();
        let want = ComplexMatrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(flagged.matrix().max_abs_diff(&want) < 1e-15);
        assert!(is_incoherent_state(&flagged, 1e-15));
    }
}
