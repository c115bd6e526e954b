//! Randomized monotonicity laboratory.
//!
//! [`check_conditions`] evaluates the conditions for one (state, instrument,
//! measure) triple; [`campaign`] runs seeded trials of it and aggregates.

pub mod campaign;
pub mod random;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, apply_selective, flag_embed, IncoherentInstrument};
use crate::error::{Error, Result};
use crate::io::{ChannelFile, StateFile};
use crate::measures::{measure, MeasureId};
use crate::state::{dephase, DensityMatrix};

pub use campaign::{fuzz_campaign, fuzz_campaign_sequential, fuzz_campaign_with_workers, CampaignConfig, CampaignReport, Totals};
pub use random::{random_density, random_incoherent_instrument};

/// Default verdict threshold on residuals.
pub const VIOLATION_THRESHOLD: f64 = 1e-8;
/// (C1') applies to states whose largest off-diagonal magnitude exceeds this.
pub const FAITHFULNESS_COHERENCE: f64 = 1e-3;
/// Minimal value (C1') demands of such states.
pub const FAITHFULNESS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Vanishing on incoherent states.
    #[serde(rename = "C1")]
    C1,
    /// Faithfulness: positive on coherent states.
    #[serde(rename = "C1'")]
    C1Prime,
    /// Monotone under non-selective incoherent channels.
    #[serde(rename = "C2a")]
    C2a,
    /// Monotone on average under selective incoherent measurements.
    #[serde(rename = "C2b")]
    C2b,
    /// Monotone under appending a classical flag.
    #[serde(rename = "C2c")]
    C2c,
    /// Convex.
    #[serde(rename = "C3")]
    C3,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::C1,
        Condition::C1Prime,
        Condition::C2a,
        Condition::C2b,
        Condition::C2c,
        Condition::C3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::C1 => "C1",
            Condition::C1Prime => "C1'",
            Condition::C2a => "C2a",
            Condition::C2b => "C2b",
            Condition::C2c => "C2c",
            Condition::C3 => "C3",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown condition {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

/// What is known mathematically about a (measure, condition) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Proved,
    Refuted,
    /// Campaign results are empirical observations only.
    Open,
}

pub fn claim(m: MeasureId, c: Condition) -> Claim {
    use Condition::*;
    match (m, c) {
        (MeasureId::RelEnt | MeasureId::L1, _) => Claim::Proved,
        (_, C1 | C1Prime | C3) => Claim::Proved,
        (MeasureId::Fidelity | MeasureId::TraceNorm, C2a) => Claim::Proved,
        (MeasureId::L2, C2b) => Claim::Refuted,
        _ => Claim::Open,
    }
}

/// Replayable input of a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub state: StateFile,
    pub channel: ChannelFile,
    pub mix_seed: u64,
}

/// `residual = lhs - rhs`; the condition holds when
/// `residual >= -threshold`. For optimizer-based measures the verdict
/// accounts for the certified gaps of both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial: Option<u64>,
    pub measure: MeasureId,
    pub condition: Condition,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl ConditionReport {
    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

/// A measure value known to lie in `[value - gap, value]`.
#[derive(Debug, Clone, Default)]
struct Eval {
    value: f64,
    gap: f64,
    note: Option<String>,
}

impl Eval {
    fn exact(value: f64) -> Self {
        Self {
            value,
            ..Self::default()
        }
    }
}

/// Optimizer failures still give a usable interval, plus a note.
fn evaluate(id: MeasureId, rho: &DensityMatrix) -> Result<Eval> {
    match measure(id, rho) {
        Ok(r) => Ok(Eval {
            value: r.value,
            gap: r.optimizer_residual.unwrap_or(0.0),
            note: None,
        }),
        Err(Error::OptimizerDidNotConverge {
            value, residual, ..
        }) => Ok(Eval {
            value,
            gap: residual,
            note: Some(format!("optimizer stopped with certified gap {residual:e}")),
        }),
        Err(e) => Err(e),
    }
}

struct Pending {
    condition: Condition,
    lhs: Eval,
    rhs: Eval,
}

/// Weighted average of measure values.
fn average<'a>(id: MeasureId, terms: impl Iterator<Item = (f64, &'a DensityMatrix)>) -> Result<Eval> {
    let mut out = Eval::default();
    let mut notes = Vec::new();
    for (p, rho) in terms {
        let e = evaluate(id, rho)?;
        out.value += p * e.value;
        out.gap += p * e.gap;
        notes.extend(e.note);
    }
    out.note = (!notes.is_empty()).then(|| notes.join("; "));
    Ok(out)
}

/// The true residual lies in `[residual - lhs.gap, residual + rhs.gap]`;
/// only a verdict that holds on the whole interval is reported.
fn verdict(residual: f64, lhs_gap: f64, rhs_gap: f64, threshold: f64) -> Verdict {
    if residual - lhs_gap >= -threshold {
        Verdict::Holds
    } else if residual + rhs_gap < -threshold {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// The seeded mixture used by (C3): `rho` plus one to three random states.
pub fn c3_ensemble(rho: &DensityMatrix, mix_seed: u64) -> Result<(Vec<f64>, Vec<DensityMatrix>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed);
    let d = rho.dim();
    let extra = rng.random_range(1..=3usize);
    let mut states = vec![rho.clone()];
    for _ in 0..extra {
        let rank = rng.random_range(1..=d);
        states.push(random::random_density_with(&mut rng, d, rank)?);
    }
    let weights = random::random_simplex_point(&mut rng, states.len());
    Ok((weights, states))
}

/// Evaluates the requested conditions for `measure` on `(rho, phi)`.
///
/// (C2a) is skipped for instruments without a common output dimension.
pub fn check_conditions(
    id: MeasureId,
    rho: &DensityMatrix,
    phi: &IncoherentInstrument,
    conditions: &[Condition],
    threshold: f64,
    mix_seed: u64,
) -> Result<Vec<ConditionReport>> {
    if phi.d_in() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.d_in(),
            found: rho.dim(),
        });
    }
    let needs_value = conditions.iter().any(|c| *c != Condition::C1 && *c != Condition::C3);
    let value = if needs_value { Some(evaluate(id, rho)?) } else { None };
    let needs_outcomes = conditions.iter().any(|c| matches!(c, Condition::C2b | Condition::C2c));
    let outcomes = if needs_outcomes { apply_selective(phi, rho)? } else { Vec::new() };

    let mut pending = Vec::new();
    for &c in conditions {
        let base = || value.clone().expect("value computed for this condition");
        let (lhs, rhs) = match c {
            Condition::C1 => (Eval::exact(0.0), evaluate(id, &dephase(rho))?),
            Condition::C1Prime => {
                let floor = if rho.max_off_diagonal() > FAITHFULNESS_COHERENCE {
                    FAITHFULNESS_FLOOR
                } else {
                    0.0
                };
                (base(), Eval::exact(floor))
            }
            Condition::C2a => {
                if phi.uniform_d_out().is_none() {
                    continue;
                }
                let out = apply_channel(phi, rho)?;
                (base(), evaluate(id, &out)?)
            }
            Condition::C2b => {
                let terms = outcomes
                    .iter()
                    .filter_map(|o| o.state.as_ref().map(|s| (o.probability, s)));
                (base(), average(id, terms)?)
            }
            Condition::C2c => (base(), evaluate(id, &flag_embed(&outcomes)?)?),
            Condition::C3 => {
                let (weights, states) = c3_ensemble(rho, mix_seed)?;
                let mix = DensityMatrix::mixture(&weights, &states)?;
                (average(id, weights.iter().copied().zip(states.iter()))?, evaluate(id, &mix)?)
            }
        };
        pending.push(Pending { condition: c, lhs, rhs });
    }

    Ok(pending
        .into_iter()
        .map(|p| {
            let residual = p.lhs.value - p.rhs.value;
            let verdict = verdict(residual, p.lhs.gap, p.rhs.gap, threshold);
            let mut notes: Vec<String> = p.lhs.note.into_iter().chain(p.rhs.note).collect();
            if verdict == Verdict::Inconclusive && notes.is_empty() {
                notes.push(format!(
                    "residual within optimizer gap ({:e} + {:e})",
                    p.lhs.gap, p.rhs.gap
                ));
            }
            let witness = (verdict == Verdict::Violated).then(|| Witness {
                state: StateFile::from_density(rho),
                channel: ChannelFile::from_instrument(phi),
                mix_seed,
            });
            ConditionReport {
                trial: None,
                measure: id,
                condition: p.condition,
                lhs: p.lhs.value,
                rhs: p.rhs.value,
                residual,
                verdict,
                witness,
                note: (!notes.is_empty()).then(|| notes.join("; ")),
            }
        })
        .collect())
}

/// Re-runs a violation from its witness.
pub fn replay(report: &ConditionReport, threshold: f64) -> Result<ConditionReport> {
    let w = report
        .witness
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("report carries no witness".into()))?;
    let rho = w.state.to_density()?;
    let phi = w.channel.to_instrument()?;
    let mut out = check_conditions(report.measure, &rho, &phi, &[report.condition], threshold, w.mix_seed)?;
    out.pop()
        .ok_or_else(|| Error::InvalidConfig("condition not applicable to witness".into()))
}
