//! Constructive protocols: state preparation from the maximally coherent
//! state, qubit gates powered by a coherent ancilla, probabilistic pure-state
//! conversion, and the counterexample showing that the l2 quantity is not a
//! monotone.

use serde::{Deserialize, Serialize};

use crate::channel::{apply_selective, validate_instrument, IncoherentInstrument};
use crate::error::{Error, Result};
use crate::io::{ChannelFile, StateFile};
use crate::lab::{Condition, ConditionReport, Verdict, Witness, VIOLATION_THRESHOLD};
use crate::linalg::{orthonormality_residual, ComplexMatrix, C64, ONE, ZERO};
use crate::measures::{c_l2, MeasureId};
use crate::state::{check_probability_vector, validate_density, DensityMatrix, StateVector};

/// Unitarity tolerance for gate inputs.
pub const UNITARY_TOL: f64 = 1e-9;
/// Amplitudes at or below this magnitude are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Normalization tolerance for counterexample parameters.
pub const PARAMS_TOL: f64 = 1e-12;

/// `|Psi_d> = d^{-1/2} sum_i |i>`.
pub fn max_coherent_state(d: usize) -> Result<StateVector> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let a = 1.0 / (d as f64).sqrt();
    StateVector::new(vec![C64::new(a, 0.0); d])
}

/// Cyclic 1-based index `mod(x - 1, d) + 1`.
pub fn mod_shift(x: i64, d: usize) -> usize {
    assert!(d >= 1, "mod_shift needs d >= 1");
    (x - 1).rem_euclid(d as i64) as usize + 1
}

/// Target ensemble `sum_l q_l |phi_l><phi_l|` on `dim` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillationSpec {
    dim: usize,
    ensemble: Vec<(f64, StateVector)>,
}

impl DistillationSpec {
    pub fn new(dim: usize, ensemble: Vec<(f64, StateVector)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if ensemble.is_empty() {
            return Err(Error::InvalidSpec("empty ensemble".into()));
        }
        if let Some((_, s)) = ensemble.iter().find(|(_, s)| s.dim() != dim) {
            return Err(Error::InvalidSpec(format!(
                "amplitude vector of length {} for dimension {dim}",
                s.dim()
            )));
        }
        let weights: Vec<f64> = ensemble.iter().map(|(q, _)| *q).collect();
        check_probability_vector(&weights).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        Ok(Self { dim, ensemble })
    }

    pub fn pure(target: StateVector) -> Self {
        Self {
            dim: target.dim(),
            ensemble: vec![(1.0, target)],
        }
    }

    /// Spectral decomposition of a target density matrix.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let spec = rho.spectrum()?;
        let d = rho.dim();
        let mut ensemble = Vec::new();
        for (k, &lambda) in spec.eigenvalues.iter().enumerate() {
            if lambda > SUPPORT_TOL {
                ensemble.push((lambda, StateVector::normalized(spec.eigenvectors.column(k))?));
            }
        }
        let total: f64 = ensemble.iter().map(|(q, _)| q).sum();
        for (q, _) in &mut ensemble {
            *q /= total;
        }
        Self::new(d, ensemble)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ensemble(&self) -> &[(f64, StateVector)] {
        &self.ensemble
    }

    pub fn target(&self) -> DensityMatrix {
        let weights: Vec<f64> = self.ensemble.iter().map(|(q, _)| *q).collect();
        let states: Vec<DensityMatrix> = self.ensemble.iter().map(|(_, s)| s.density()).collect();
        DensityMatrix::mixture(&weights, &states).expect("validated ensemble")
    }
}

/// `K_n^(l) = sqrt(q_l) sum_i c_i^(l) |i><m_{i+n-1}|` for `n = 1..d`, ordered
/// by `l` then `n`. Zero-weight members are dropped.
pub fn distillation_instrument(spec: &DistillationSpec) -> Result<IncoherentInstrument> {
    let d = spec.dim;
    let mut ops = Vec::new();
    for (q, phi) in &spec.ensemble {
        if *q <= 0.0 {
            continue;
        }
        let s = q.sqrt();
        for n in 1..=d {
            let mut k = ComplexMatrix::zeros(d, d);
            for i in 1..=d {
                let col = mod_shift((i + n - 1) as i64, d);
                k[(i - 1, col - 1)] = phi.amplitudes()[i - 1] * s;
            }
            ops.push(k);
        }
    }
    validate_instrument(ops)
}

/// `|phi> (x) |Psi_2>`, system qubit first.
pub fn gate_input(phi: &StateVector) -> Result<DensityMatrix> {
    if phi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: phi.dim(),
        });
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let amps: Vec<C64> = phi
        .amplitudes()
        .iter()
        .flat_map(|&x| [x * a, x * a])
        .collect();
    Ok(StateVector::new(amps)?.density())
}

/// The two Kraus operators realizing the qubit unitary `u` on a system
/// qubit with a `|Psi_2>` ancilla; basis index `2k + l` for `|k l>`.
pub fn gate_instrument(u: &ComplexMatrix) -> Result<IncoherentInstrument> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: if u.rows() != 2 { u.rows() } else { u.cols() },
        });
    }
    let residual = orthonormality_residual(u);
    if residual > UNITARY_TOL {
        return Err(Error::NotUnitary(residual));
    }
    let idx = |k: usize, l: usize| 2 * k + l;
    let mut k0 = ComplexMatrix::zeros(4, 4);
    k0[(idx(0, 0), idx(0, 0))] = u[(0, 0)];
    k0[(idx(1, 0), idx(0, 1))] = u[(1, 0)];
    k0[(idx(0, 0), idx(1, 0))] = u[(0, 1)];
    k0[(idx(1, 0), idx(1, 1))] = u[(1, 1)];
    let mut k1 = ComplexMatrix::zeros(4, 4);
    k1[(idx(0, 1), idx(0, 1))] = u[(0, 0)];
    k1[(idx(1, 1), idx(0, 0))] = u[(1, 0)];
    k1[(idx(0, 1), idx(1, 1))] = u[(0, 1)];
    k1[(idx(1, 1), idx(1, 0))] = u[(1, 1)];
    validate_instrument(vec![k0, k1])
}

/// Traces out the second factor of a `d_a * d_b` bipartite operator.
pub fn partial_trace_second(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    if m.rows() != d_a * d_b || m.cols() != d_a * d_b {
        return Err(Error::DimensionMismatch {
            expected: d_a * d_b,
            found: m.rows(),
        });
    }
    Ok(ComplexMatrix::from_fn(d_a, d_a, |i, j| {
        (0..d_b).map(|l| m[(i * d_b + l, j * d_b + l)]).sum()
    }))
}

/// Finite-copy conversion `psi -> phi`, succeeding on outcome
/// `success_index` with probability `p1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionPlan {
    pub source: StateVector,
    pub target: StateVector,
    pub instrument: IncoherentInstrument,
    pub success_index: usize,
    pub p1: f64,
    /// `perm[l]` is the original index placed at position `l`; the identity
    /// when the source has full support.
    pub source_permutation: Vec<usize>,
    pub target_permutation: Vec<usize>,
}

/// Serializable summary of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionSummary {
    pub p1: f64,
    pub success_index: usize,
    pub source_support: usize,
    pub target_support: usize,
    pub source_permutation: Vec<usize>,
    pub target_permutation: Vec<usize>,
    pub instrument: ChannelFile,
}

impl ConversionPlan {
    pub fn summary(&self) -> ConversionSummary {
        ConversionSummary {
            p1: self.p1,
            success_index: self.success_index,
            source_support: support(&self.source),
            target_support: support(&self.target),
            source_permutation: self.source_permutation.clone(),
            target_permutation: self.target_permutation.clone(),
            instrument: ChannelFile::from_instrument(&self.instrument),
        }
    }
}

fn support(psi: &StateVector) -> usize {
    psi.amplitudes().iter().filter(|z| z.norm() > SUPPORT_TOL).count()
}

/// Indices sorted by descending magnitude; ties keep their original order.
fn descending_order(psi: &StateVector) -> Vec<usize> {
    let a = psi.amplitudes();
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[j].norm().total_cmp(&a[i].norm()));
    idx
}

/// Builds the conversion instrument. The reorderings are folded into the
/// Kraus operators, so the success outcome is `|phi>` itself.
pub fn conversion_instrument(psi: &StateVector, phi: &StateVector) -> Result<ConversionPlan> {
    let d = psi.dim();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: phi.dim(),
        });
    }
    let m_psi = support(psi);
    let m_phi = support(phi);
    if m_psi < m_phi {
        return Err(Error::SupportTooSmall {
            source_support: m_psi,
            target_support: m_phi,
        });
    }
    let (p_psi, p_phi) = if m_psi == d {
        ((0..d).collect::<Vec<_>>(), (0..d).collect::<Vec<_>>())
    } else {
        (descending_order(psi), descending_order(phi))
    };
    let src: Vec<C64> = p_psi.iter().map(|&i| psi.amplitudes()[i]).collect();
    let tgt: Vec<C64> = p_phi.iter().map(|&i| phi.amplitudes()[i]).collect();
    let m = m_psi;
    if tgt[m..].iter().any(|z| z.norm() > SUPPORT_TOL) {
        return Err(Error::ZeroOverlapDegenerate);
    }
    let ratio_sum: f64 = (0..m).map(|l| (tgt[l] / src[l]).norm_sqr()).sum();
    if !(ratio_sum > 0.0 && ratio_sum.is_finite()) {
        return Err(Error::ZeroOverlapDegenerate);
    }
    let p1 = 1.0 / ratio_sum;
    let scale = p1.sqrt();

    // Operators in the reordered basis; K_n on the first m levels, then one
    // projector per level outside the support.
    let mut ops = Vec::with_capacity(d);
    for n in 1..=m {
        let mut k = ComplexMatrix::zeros(d, d);
        for l in 1..=m {
            let col = mod_shift((l + n - 1) as i64, m);
            k[(l - 1, col - 1)] = tgt[l - 1] * scale / src[l - 1];
        }
        ops.push(k);
    }
    for l in m..d {
        let mut k = ComplexMatrix::zeros(d, d);
        k[(l, l)] = ONE;
        ops.push(k);
    }
    // Back to the original basis: Q_phi^dagger K Q_psi with Q |perm[l]> = |l>.
    let q_psi = reorder_matrix(&p_psi);
    let q_phi_dag = reorder_matrix(&p_phi).adjoint();
    let ops = ops
        .into_iter()
        .map(|k| q_phi_dag.matmul(&k).matmul(&q_psi))
        .collect();
    Ok(ConversionPlan {
        source: psi.clone(),
        target: phi.clone(),
        instrument: validate_instrument(ops)?,
        success_index: 0,
        p1,
        source_permutation: p_psi,
        target_permutation: p_phi,
    })
}

/// `Q = sum_l |l><perm[l]|`.
fn reorder_matrix(perm: &[usize]) -> ComplexMatrix {
    let d = perm.len();
    let mut q = ComplexMatrix::zeros(d, d);
    for (l, &i) in perm.iter().enumerate() {
        q[(l, i)] = ONE;
    }
    q
}

/// `alpha, beta` with `|alpha|^2 + |beta|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    alpha: C64,
    beta: C64,
}

impl CounterexampleParams {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > PARAMS_TOL || !norm.is_finite() {
            return Err(Error::NotNormalizedParams(norm));
        }
        Ok(Self { alpha, beta })
    }

    /// Real parameters with `|beta|^2 = beta2`.
    pub fn from_beta2(beta2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta2) {
            return Err(Error::NotNormalizedParams(beta2));
        }
        Self::new(C64::new((1.0 - beta2).sqrt(), 0.0), C64::new(beta2.sqrt(), 0.0))
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }
}

/// `[[1/4, 0, 1/4], [0, 1/2, 0], [1/4, 0, 1/4]]`
pub fn appendix_f_state() -> DensityMatrix {
    let m = ComplexMatrix::from_real(3, 3, &[0.25, 0.0, 0.25, 0.0, 0.5, 0.0, 0.25, 0.0, 0.25])
        .expect("fixed shape");
    validate_density(&m).expect("fixed state is valid")
}

/// `K_1 = |0><1| + alpha |2><2|`, `K_2 = |0><0| + beta |1><2|`.
pub fn appendix_f_instrument(params: &CounterexampleParams) -> Result<IncoherentInstrument> {
    let z = ZERO;
    let k1 = ComplexMatrix::new(3, 3, vec![z, ONE, z, z, z, z, z, z, params.alpha])?;
    let k2 = ComplexMatrix::new(3, 3, vec![ONE, z, z, z, z, params.beta, z, z, z])?;
    validate_instrument(vec![k1, k2])
}

/// (C2b) check of the l2 quantity on the fixed state and instrument. The
/// residual is `C_l2(rho) - sum_k p_k C_l2(rho_k)`; the boundary
/// `|beta|^2 = 1/3` gives zero and holds.
pub fn l2_counterexample(params: &CounterexampleParams) -> Result<ConditionReport> {
    let rho = appendix_f_state();
    let phi = appendix_f_instrument(params)?;
    let lhs = c_l2(&rho).value;
    let rhs: f64 = apply_selective(&phi, &rho)?
        .iter()
        .filter_map(|o| o.state.as_ref().map(|s| o.probability * c_l2(s).value))
        .sum();
    let residual = lhs - rhs;
    let violated = residual < -VIOLATION_THRESHOLD;
    Ok(ConditionReport {
        trial: None,
        measure: MeasureId::L2,
        condition: Condition::C2b,
        lhs,
        rhs,
        residual,
        verdict: if violated { Verdict::Violated } else { Verdict::Holds },
        witness: violated.then(|| Witness {
            state: StateFile::from_density(&rho),
            channel: ChannelFile::from_instrument(&phi),
            mix_seed: 0,
        }),
        note: None,
    })
}

/// `|beta|^2 / (2 (1 + |beta|^2))`, the closed form of the outcome average.
pub fn l2_counterexample_average(params: &CounterexampleParams) -> f64 {
    let b2 = params.beta.norm_sqr();
    b2 / (2.0 * (1.0 + b2))
}
