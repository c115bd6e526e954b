//! Seeded fuzz campaigns over random states and instruments.
//!
//! Trial `t` draws from the ChaCha stream `t` of the master seed, so its
//! inputs do not depend on which worker runs it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::random::{random_density_with, random_incoherent_instrument_with};
use super::{check_conditions, claim, Claim, Condition, ConditionReport, Verdict, VIOLATION_THRESHOLD};
use crate::channel::IncoherentInstrument;
use crate::error::{Error, Result};
use crate::measures::MeasureId;
use crate::protocols::{appendix_f_instrument, appendix_f_state, CounterexampleParams};
use crate::state::DensityMatrix;

/// Largest number of Kraus operators in a random instrument.
pub const MAX_RANDOM_OPS: usize = 3;

fn default_threshold() -> f64 {
    VIOLATION_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub dims: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub measures: Vec<MeasureId>,
    pub conditions: Vec<Condition>,
    #[serde(default = "default_threshold")]
    pub violation_threshold: f64,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidConfig("dims must be a nonempty list of integers >= 2".into()));
        }
        if !(self.violation_threshold > 0.0 && self.violation_threshold.is_finite()) {
            return Err(Error::InvalidConfig("violation_threshold must be positive".into()));
        }
        if self.measures.is_empty() || self.conditions.is_empty() {
            return Err(Error::InvalidConfig("measures and conditions must be nonempty".into()));
        }
        Ok(())
    }

    fn injects_witness(&self) -> bool {
        self.measures.contains(&MeasureId::L2) && self.conditions.contains(&Condition::C2b)
    }
}

/// Counts for one (measure, condition) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub measure: MeasureId,
    pub condition: Condition,
    pub claim: Claim,
    pub evaluated: u64,
    pub holds: u64,
    pub violated: u64,
    pub inconclusive: u64,
    /// Smallest residual among conclusive evaluations.
    pub min_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub totals: Vec<Totals>,
    pub violations: Vec<ConditionReport>,
    pub inconclusive: Vec<ConditionReport>,
}

impl CampaignReport {
    pub fn totals_for(&self, m: MeasureId, c: Condition) -> Option<&Totals> {
        self.totals.iter().find(|t| t.measure == m && t.condition == c)
    }
}

/// The random inputs of trial `t`.
pub fn trial_inputs(cfg: &CampaignConfig, t: u64) -> Result<(DensityMatrix, IncoherentInstrument, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t);
    let d = cfg.dims[rng.random_range(0..cfg.dims.len())];
    let rank = rng.random_range(1..=d);
    let rho = random_density_with(&mut rng, d, rank)?;
    let n_ops = rng.random_range(1..=MAX_RANDOM_OPS);
    let phi = random_incoherent_instrument_with(&mut rng, d, n_ops)?;
    let mix_seed: u64 = rng.random();
    if t == 0 && cfg.injects_witness() {
        let params = CounterexampleParams::from_beta2(0.5)?;
        return Ok((appendix_f_state(), appendix_f_instrument(&params)?, mix_seed));
    }
    Ok((rho, phi, mix_seed))
}

fn failed(cfg: &CampaignConfig, t: u64, m: MeasureId, e: &Error) -> Vec<ConditionReport> {
    cfg.conditions
        .iter()
        .map(|&c| ConditionReport {
            trial: Some(t),
            measure: m,
            condition: c,
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
            verdict: Verdict::Inconclusive,
            witness: None,
            note: Some(e.to_string()),
        })
        .collect()
}

fn run_trial(cfg: &CampaignConfig, t: u64) -> Vec<ConditionReport> {
    let (rho, phi, mix_seed) = match trial_inputs(cfg, t) {
        Ok(inputs) => inputs,
        Err(e) => return cfg.measures.iter().flat_map(|&m| failed(cfg, t, m, &e)).collect(),
    };
    let mut out = Vec::new();
    for &m in &cfg.measures {
        match check_conditions(m, &rho, &phi, &cfg.conditions, cfg.violation_threshold, mix_seed) {
            Ok(mut rs) => {
                for r in &mut rs {
                    r.trial = Some(t);
                }
                out.extend(rs);
            }
            Err(e) => out.extend(failed(cfg, t, m, &e)),
        }
    }
    out
}

fn aggregate(cfg: &CampaignConfig, trials: Vec<Vec<ConditionReport>>) -> CampaignReport {
    let mut totals: Vec<Totals> = cfg
        .measures
        .iter()
        .flat_map(|&m| {
            cfg.conditions.iter().map(move |&c| Totals {
                measure: m,
                condition: c,
                claim: claim(m, c),
                evaluated: 0,
                holds: 0,
                violated: 0,
                inconclusive: 0,
                min_residual: None,
            })
        })
        .collect();
    let mut violations = Vec::new();
    let mut inconclusive = Vec::new();
    for r in trials.into_iter().flatten() {
        let slot = totals
            .iter_mut()
            .find(|s| s.measure == r.measure && s.condition == r.condition)
            .expect("every report belongs to a configured pair");
        slot.evaluated += 1;
        match r.verdict {
            Verdict::Holds => slot.holds += 1,
            Verdict::Violated => slot.violated += 1,
            Verdict::Inconclusive => slot.inconclusive += 1,
        }
        if r.verdict != Verdict::Inconclusive {
            slot.min_residual = Some(slot.min_residual.map_or(r.residual, |m| m.min(r.residual)));
        }
        match r.verdict {
            Verdict::Violated => violations.push(r),
            Verdict::Inconclusive => inconclusive.push(r),
            Verdict::Holds => {}
        }
    }
    CampaignReport {
        config: cfg.clone(),
        totals,
        violations,
        inconclusive,
    }
}

/// Runs every trial on the calling thread.
pub fn fuzz_campaign_sequential(cfg: &CampaignConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let trials = (0..cfg.trials).map(|t| run_trial(cfg, t)).collect();
    Ok(aggregate(cfg, trials))
}

#[cfg(feature = "parallel")]
fn run_parallel(cfg: &CampaignConfig, workers: Option<usize>) -> Result<Vec<Vec<ConditionReport>>> {
    use rayon::prelude::*;
    let work = || (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    match workers {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(work))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(cfg: &CampaignConfig, _workers: Option<usize>) -> Result<Vec<Vec<ConditionReport>>> {
    Ok((0..cfg.trials).map(|t| run_trial(cfg, t)).collect())
}

/// Runs the campaign on `workers` threads (all cores when `None`). The
/// report is identical for every worker count. Without the `parallel`
/// feature this is sequential.
pub fn fuzz_campaign_with_workers(cfg: &CampaignConfig, workers: Option<usize>) -> Result<CampaignReport> {
    cfg.validate()?;
    if workers == Some(0) {
        return Err(Error::InvalidConfig("workers must be at least 1".into()));
    }
    Ok(aggregate(cfg, run_parallel(cfg, workers)?))
}

pub fn fuzz_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    fuzz_campaign_with_workers(cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(measures: Vec<MeasureId>, trials: u64) -> CampaignConfig {
        CampaignConfig {
            dims: vec![2, 3],
            trials,
            seed: 11,
            measures,
            conditions: Condition::ALL.to_vec(),
            violation_threshold: VIOLATION_THRESHOLD,
        }
    }

    #[test]
    fn config_parses_with_default_threshold() {
        let cfg: CampaignConfig = serde_json::from_str(
            r#"{"dims":[2,3,4],"trials":10,"seed":42,"measures":["REL_ENT","L1"],"conditions":["C1","C1'","C2a","C2b","C2c","C3"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.violation_threshold, 1e-8);
        assert_eq!(cfg.conditions.len(), 6);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = config(vec![MeasureId::L1], 1);
        cfg.dims = vec![1];
        assert!(cfg.validate().is_err());
        let mut cfg = config(vec![MeasureId::L1], 0);
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.violation_threshold = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn witness_is_injected_for_l2() {
        let report = fuzz_campaign(&config(vec![MeasureId::L2], 3)).unwrap();
        let t = report.totals_for(MeasureId::L2, Condition::C2b).unwrap();
        assert!(t.violated >= 1);
        assert_eq!(t.claim, Claim::Refuted);
        assert!(report.violations.iter().any(|v| v.trial == Some(0)));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = config(vec![MeasureId::RelEnt, MeasureId::L1, MeasureId::L2], 40);
        let a = fuzz_campaign_sequential(&cfg).unwrap();
        let b = fuzz_campaign_with_workers(&cfg, Some(3)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn proved_measures_do_not_violate() {
        let report = fuzz_campaign(&config(vec![MeasureId::RelEnt, MeasureId::L1], 60)).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.totals.iter().all(|t| t.inconclusive == 0));
    }
}
