//! Coherence measures.
//!
//! `REL_ENT`, `L1` and `L2` have closed forms. `FIDELITY` and `TRACE_NORM`
//! are minimal distances to the incoherent set and go through
//! [`minimize_over_incoherent`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::{shannon_entropy, von_neumann_entropy, ENTROPY_ZERO_TOL};
use crate::error::{Error, Result};
use crate::optimize::{minimize_over_incoherent, DistanceObjective};
use crate::state::{DensityMatrix, IncoherentState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasureId {
    #[serde(rename = "REL_ENT")]
    RelEnt,
    #[serde(rename = "L1")]
    L1,
    #[serde(rename = "L2")]
    L2,
    #[serde(rename = "FIDELITY")]
    Fidelity,
    #[serde(rename = "TRACE_NORM")]
    TraceNorm,
}

impl MeasureId {
    pub const ALL: [MeasureId; 5] = [
        MeasureId::RelEnt,
        MeasureId::L1,
        MeasureId::L2,
        MeasureId::Fidelity,
        MeasureId::TraceNorm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureId::RelEnt => "REL_ENT",
            MeasureId::L1 => "L1",
            MeasureId::L2 => "L2",
            MeasureId::Fidelity => "FIDELITY",
            MeasureId::TraceNorm => "TRACE_NORM",
        }
    }

    /// Whether the measure is known to violate monotonicity.
    pub fn is_not_a_monotone(self) -> bool {
        self == MeasureId::L2
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown measure {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: MeasureId,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub minimizer: Option<IncoherentState>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub optimizer_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<usize>,
    /// Distance to the dephased state; recorded for the optimizer-backed
    /// measures, where it may exceed `value`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dephased_value: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub not_a_monotone: bool,
}

impl MeasureReport {
    fn closed_form(measure: MeasureId, value: f64, rho: &DensityMatrix) -> Self {
        Self {
            measure,
            value: value.max(0.0),
            minimizer: Some(IncoherentState::diagonal_of(rho)),
            optimizer_residual: None,
            iterations: None,
            dephased_value: None,
            not_a_monotone: measure.is_not_a_monotone(),
        }
    }
}

/// `S(dephase(rho)) - S(rho)` in bits.
pub fn c_rel_ent(rho: &DensityMatrix) -> Result<MeasureReport> {
    let diag = shannon_entropy(&rho.populations(), ENTROPY_ZERO_TOL);
    let value = diag - von_neumann_entropy(rho)?;
    Ok(MeasureReport::closed_form(MeasureId::RelEnt, value, rho))
}

fn off_diagonal_sum(rho: &DensityMatrix, f: impl Fn(f64) -> f64) -> f64 {
    let m = rho.matrix();
    let d = rho.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += f(m[(i, j)].norm());
            }
        }
    }
    s
}

pub fn c_l1(rho: &DensityMatrix) -> MeasureReport {
    MeasureReport::closed_form(MeasureId::L1, off_diagonal_sum(rho, |x| x), rho)
}

/// Squared Hilbert-Schmidt distance to the dephased state. Not a monotone.
pub fn c_l2(rho: &DensityMatrix) -> MeasureReport {
    MeasureReport::closed_form(MeasureId::L2, off_diagonal_sum(rho, |x| x * x), rho)
}

fn optimized(rho: &DensityMatrix, measure: MeasureId, obj: DistanceObjective) -> Result<MeasureReport> {
    let s = minimize_over_incoherent(rho, obj)?;
    Ok(MeasureReport {
        measure,
        value: s.value,
        minimizer: Some(s.minimizer),
        optimizer_residual: Some(s.residual),
        iterations: Some(s.iterations),
        dephased_value: Some(s.dephased_value),
        not_a_monotone: false,
    })
}

/// `min_delta 1 - sqrt(F(rho, delta))`.
pub fn c_fidelity(rho: &DensityMatrix) -> Result<MeasureReport> {
    optimized(rho, MeasureId::Fidelity, DistanceObjective::FidelityDist)
}

/// `min_delta ||rho - delta||_tr`.
pub fn c_trace(rho: &DensityMatrix) -> Result<MeasureReport> {
    optimized(rho, MeasureId::TraceNorm, DistanceObjective::TraceDist)
}

pub fn measure(id: MeasureId, rho: &DensityMatrix) -> Result<MeasureReport> {
    match id {
        MeasureId::RelEnt => c_rel_ent(rho),
        MeasureId::L1 => Ok(c_l1(rho)),
        MeasureId::L2 => Ok(c_l2(rho)),
        MeasureId::Fidelity => c_fidelity(rho),
        MeasureId::TraceNorm => c_trace(rho),
    }
}

pub fn measure_value(id: MeasureId, rho: &DensityMatrix) -> Result<f64> {
    measure(id, rho).map(|r| r.value)
}
