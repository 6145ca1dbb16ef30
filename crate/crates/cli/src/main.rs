//! `qmem`: robustness of quantum memories from the command line.
//!
//! Results go to stdout as JSON (CSV for `sweep` and `dd` when `--out` is
//! given). Exit codes: 0 success, 2 invalid input, 3 solver failure,
//! 4 capacity exceeded.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qmem_core::dynamics::{trajectory, BathModel, PulseSequence, DEFAULT_DD_RATE};
use qmem_core::games::{canned_game, payoff, CannedGame};
use qmem_core::io::{self, linspace};
use qmem_core::robustness::{log_robustness, robustness, robustness_ppt_with, synthesis_cost, Method, RobustnessResult};
use qmem_core::sdp::SdpOptions;
use qmem_core::simulation::{decompose, sample_estimate, synthesis_superchannel};
use qmem_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qmem", version, about = "Robustness of quantum memories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness of a channel by a closed-form bound or the PPT SDP.
    Robustness {
        #[arg(long)]
        channel: PathBuf,
        /// eig | moment | sdp | sdp-gen | ent | ent-gen
        #[arg(long, default_value = "sdp")]
        method: String,
        /// Moment order for `--method moment`.
        #[arg(long)]
        k: Option<u32>,
        /// Write the interior-point iteration history as CSV.
        #[arg(long)]
        sdp_trace: Option<PathBuf>,
    },
    /// Payoff of a game on a channel.
    Game {
        /// Game JSON file.
        #[arg(long, conflicts_with = "canned")]
        game: Option<PathBuf>,
        /// Built-in game: dephasing | depolarizing | erasure | damping.
        #[arg(long)]
        canned: Option<String>,
        /// Parameter of the damping game.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        channel: PathBuf,
    },
    /// Robustness of a channel family over a parameter grid.
    Sweep {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        /// Number of grid intervals.
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Comma-separated methods.
        #[arg(long, default_value = "eig,sdp")]
        methods: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quasi-probability decomposition N = (1+s)M₊ − sM₋.
    Decompose {
        #[arg(long)]
        channel: PathBuf,
        /// Write M₊ here.
        #[arg(long)]
        out_plus: Option<PathBuf>,
        /// Write M₋ here.
        #[arg(long)]
        out_minus: Option<PathBuf>,
    },
    /// Monte Carlo estimate of Tr[O N(ρ)] from free channels.
    Sample {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        observable: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Super-channel that synthesises the channel from an ideal memory.
    Synthesize {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Robustness trajectory of the memory-bath model.
    Dd {
        /// Pulses per unit time.
        #[arg(long, default_value_t = DEFAULT_DD_RATE)]
        rate: f64,
        #[arg(long, default_value_t = PI)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Free evolution without pulses.
        #[arg(long)]
        no_pulses: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score and robustness bound from experiment counts.
    Ingest {
        #[arg(long)]
        counts: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(v) => {
            if !v.is_null() {
                // a closed pipe downstream is not an error of ours
                let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).expect("json output"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn result_json(r: &RobustnessResult) -> Value {
    let mut v = json!({
        "value": r.value,
        "method": r.method.label(),
        "is_exact": r.is_exact,
        "log_robustness": log_robustness(r),
        "synthesis_cost": synthesis_cost(r),
    });
    if let Some(d) = &r.diagnostics {
        v["diagnostics"] = serde_json::to_value(d).expect("diagnostics serialize");
    }
    v
}

fn run(command: Command) -> Result<Value> {
    match command {
        Command::Robustness { channel, method, k, sdp_trace } => {
            let n = io::load_channel(&channel)?;
            let mut method = Method::parse(&method)?;
            if let (Method::Moment(_), Some(k)) = (method, k) {
                method = Method::Moment(k);
            }
            let mut opts = SdpOptions::from_env()?;
            match (sdp_trace, method.variant()) {
                (Some(path), Some(variant)) => {
                    opts.record_history = true;
                    let (r, sol) = robustness_ppt_with(&n, variant, &opts)?;
                    write(&path, &io::sdp_trace_csv(&sol.history)?)?;
                    Ok(result_json(&r))
                }
                (Some(_), None) => Err(Error::InvalidInput("--sdp-trace needs an SDP method".into())),
                (None, _) => Ok(result_json(&robustness(&n, method, &opts)?)),
            }
        }
        Command::Game { game, canned, p, channel } => {
            let g = match (game, canned) {
                (Some(path), None) => io::load_game(&path)?,
                (None, Some(name)) => canned_game(CannedGame::from_name(&name, p)?)?,
                _ => return Err(Error::InvalidInput("give either --game FILE or --canned NAME".into())),
            };
            let n = io::load_channel(&channel)?;
            let r = payoff(&g, &n)?;
            Ok(json!({
                "game": g.label(),
                "payoff": r.payoff,
                "robustness_lower_bound": r.robustness_lower_bound,
                "normalized": r.normalized,
                "per_setting": r.per_setting,
            }))
        }
        Command::Sweep { family, from, to, steps, methods, out } => {
            let methods = methods.split(',').map(Method::parse).collect::<Result<Vec<_>>>()?;
            let grid = linspace(from, to, steps)?;
            let rows = io::sweep(&family, &grid, &methods, &SdpOptions::from_env()?)?;
            let csv = io::sweep_csv(&rows)?;
            match out {
                Some(path) => {
                    write(&path, &csv)?;
                    Ok(json!({ "rows": rows.len(), "out": path.display().to_string() }))
                }
                None => {
                    let _ = std::io::stdout().write_all(&csv);
                    Ok(Value::Null)
                }
            }
        }
        Command::Decompose { channel, out_plus, out_minus } => {
            let n = io::load_channel(&channel)?;
            let d = decompose(&n)?;
            if let Some(path) = out_plus {
                io::save_channel(&path, &d.m_plus)?;
            }
            if let Some(path) = out_minus {
                io::save_channel(&path, &d.m_minus)?;
            }
            Ok(json!({
                "s": d.s,
                "one_norm": d.one_norm,
                "overhead": d.overhead,
                "classical_certified": d.classical_certified,
            }))
        }
        Command::Sample { channel, state, observable, shots, seed } => {
            let n = io::load_channel(&channel)?;
            let rho = io::load_matrix(&state)?;
            let o = io::load_matrix(&observable)?;
            let d = decompose(&n)?;
            Ok(serde_json::to_value(sample_estimate(&d, &rho, &o, shots, seed)?).expect("estimate serializes"))
        }
        Command::Synthesize { channel } => {
            let n = io::load_channel(&channel)?;
            let sc = synthesis_superchannel(&n)?;
            Ok(json!({
                "probe_dimension": sc.probe_dimension,
                "qubits": (sc.probe_dimension as f64).log2().ceil() as u32,
            }))
        }
        Command::Dd { rate, t_max, steps, no_pulses, out } => {
            let pulses = if no_pulses { PulseSequence::none() } else { PulseSequence::x_pulses(rate)? };
            let t = trajectory(&BathModel::reference_model(), &pulses, t_max, steps)?;
            if let Some(path) = &out {
                write(path, &io::trajectory_csv(&t)?)?;
            }
            Ok(json!({
                "label": t.label,
                "steps": steps,
                "non_markovianity": t.total_non_markovianity(),
                "robustness_at_0.8": t.robustness_at(0.8),
                "out": out.map(|p| p.display().to_string()),
            }))
        }
        Command::Ingest { counts } => {
            let r = io::load_counts(&counts)?;
            let out = io::ingest_counts(&r)?;
            Ok(json!({
                "game_label": r.game_label,
                "score": out.score,
                "std": out.std,
                "robustness_lower_bound": out.robustness_lower_bound,
            }))
        }
    }
}
