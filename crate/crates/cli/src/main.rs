//! coherence-lab: measures, instrument validation, the protocol
//! constructions and seeded monotonicity campaigns.
//!
//! Every command writes JSON to stdout (or `--out`). Exit codes: 0 success,
//! 1 a rejected channel in `validate-channel`, 2 bad input or usage.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use coherence::channel::Mode;
use coherence::io::{ChannelFile, OperatorFile, StateFile, VectorFile};
use coherence::lab::{fuzz_campaign_with_workers, CampaignConfig, ConditionReport};
use coherence::measures::{measure, MeasureId, MeasureReport};
use coherence::protocols::{
    conversion_instrument, distillation_instrument, gate_instrument, l2_counterexample,
    l2_counterexample_average, CounterexampleParams, DistillationSpec,
};
use coherence::state::DensityMatrix;
use coherence::Error;

#[derive(Parser)]
#[command(name = "coherence-lab", version, about = "Quantum coherence measures and monotonicity lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence of a state file.
    Measure {
        #[arg(long)]
        state: PathBuf,
        /// REL_ENT, L1, L2, FIDELITY, TRACE_NORM or all.
        #[arg(long, default_value = "all")]
        measure: String,
        /// JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
    /// Checks completeness and incoherence of a channel file.
    ValidateChannel {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Instrument taking the maximally coherent state to a target.
    Distill {
        /// State file (mixed target) or vector file (pure target).
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Instrument applying a qubit unitary with one maximally coherent ancilla.
    Gate {
        #[arg(long)]
        unitary: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-copy conversion between two pure states.
    Convert {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The l2 counterexample under selective measurements.
    Counterexample {
        /// |beta|^2 of the second Kraus operator.
        #[arg(long, default_value_t = 0.5)]
        beta2: f64,
    },
    /// Seeded randomized campaign over states and instruments.
    Fuzz {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per (measure, condition) totals as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_state(path: &Path) -> Result<DensityMatrix> {
    let file: StateFile = read_json(path)?;
    Ok(file.to_density()?)
}

fn measure_cmd(state: &Path, which: &str, json: bool) -> Result<()> {
    let rho = load_state(state)?;
    let ids: Vec<MeasureId> = if which.eq_ignore_ascii_case("all") {
        MeasureId::ALL.to_vec()
    } else {
        vec![which.parse()?]
    };
    let reports = ids
        .iter()
        .map(|&id| measure(id, &rho))
        .collect::<std::result::Result<Vec<MeasureReport>, Error>>()?;
    if json {
        return emit(&reports, None);
    }
    for r in &reports {
        let mut line = format!("{:<10} {:.12}", r.measure.as_str(), r.value);
        if let Some(gap) = r.optimizer_residual {
            line.push_str(&format!("  gap {gap:.1e}"));
        }
        if let Some(dephased) = r.dephased_value {
            line.push_str(&format!("  dephased {dephased:.12}"));
        }
        if r.not_a_monotone {
            line.push_str("  NOT_A_MONOTONE");
        }
        println!("{line}");
    }
    Ok(())
}

#[derive(Serialize)]
struct ChannelVerdict {
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    operators: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    completeness_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn validate_channel_cmd(path: &Path) -> Result<bool> {
    let file: ChannelFile = read_json(path)?;
    let ops = file.to_matrices()?;
    let operators = ops.len();
    let verdict = match coherence::channel::validate_instrument(ops) {
        Ok(phi) => ChannelVerdict {
            valid: true,
            mode: Some(phi.mode()),
            operators,
            completeness_residual: Some(phi.completeness_residual().max_abs()),
            error: None,
        },
        Err(e) => ChannelVerdict {
            valid: false,
            mode: None,
            operators,
            completeness_residual: match &e {
                Error::IncompleteInstrument { max_residual, .. } => Some(*max_residual),
                _ => None,
            },
            error: Some(e.to_string()),
        },
    };
    emit(&verdict, None)?;
    Ok(verdict.valid)
}

fn distill_cmd(target: &Path, dim: usize, out: Option<&Path>) -> Result<()> {
    let value: serde_json::Value = read_json(target)?;
    let spec = if value.get("vector").is_some() {
        let v: VectorFile = serde_json::from_value(value)?;
        DistillationSpec::pure(v.to_state()?)
    } else {
        let s: StateFile = serde_json::from_value(value)?;
        DistillationSpec::from_density(&s.to_density()?)?
    };
    if spec.dim() != dim {
        bail!("target has dimension {} but --dim is {dim}", spec.dim());
    }
    emit(&ChannelFile::from_instrument(&distillation_instrument(&spec)?), out)
}

fn gate_cmd(unitary: &Path, out: Option<&Path>) -> Result<()> {
    let u: OperatorFile = read_json(unitary)?;
    emit(&ChannelFile::from_instrument(&gate_instrument(&u.to_matrix()?)?), out)
}

fn convert_cmd(source: &Path, target: &Path, out: Option<&Path>) -> Result<()> {
    let psi = read_json::<VectorFile>(source)?.to_state()?;
    let phi = read_json::<VectorFile>(target)?.to_state()?;
    emit(&conversion_instrument(&psi, &phi)?.summary(), out)
}

#[derive(Serialize)]
struct CounterexampleOutput {
    beta2: f64,
    closed_form_average: f64,
    report: ConditionReport,
}

fn counterexample_cmd(beta2: f64) -> Result<()> {
    let params = CounterexampleParams::from_beta2(beta2)?;
    emit(
        &CounterexampleOutput {
            beta2,
            closed_form_average: l2_counterexample_average(&params),
            report: l2_counterexample(&params)?,
        },
        None,
    )
}

fn fuzz_cmd(
    config: &Path,
    workers: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
    csv_out: Option<&Path>,
) -> Result<()> {
    let mut cfg: CampaignConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = fuzz_campaign_with_workers(&cfg, workers)?;
    if let Some(path) = csv_out {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        for t in &report.totals {
            w.serialize(t)?;
        }
        w.flush()?;
    }
    emit(&report, out)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Measure { state, measure, json } => measure_cmd(&state, &measure, json)?,
        Command::ValidateChannel { channel } => {
            if !validate_channel_cmd(&channel)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Distill { target, dim, out } => distill_cmd(&target, dim, out.as_deref())?,
        Command::Gate { unitary, out } => gate_cmd(&unitary, out.as_deref())?,
        Command::Convert { source, target, out } => convert_cmd(&source, &target, out.as_deref())?,
        Command::Counterexample { beta2 } => counterexample_cmd(beta2)?,
        Command::Fuzz {
            config,
            workers,
            seed,
            out,
            csv,
        } => fuzz_cmd(&config, workers, seed, out.as_deref(), csv.as_deref())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
