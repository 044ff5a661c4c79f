//! `birds` command-line interface.
//!
//! `birds run` executes one scenario and writes metrics.csv, summary.json,
//! and optionally chain.json into the output directory. `birds sweep`
//! runs the experiment sweeps and writes one CSV each.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use birds_core::consensus::EngineKind;
use birds_core::simkit::{
    emit_csv, energy_timeline, parse_scenario, run_scenario, sweep_jobs, sweep_uav_count,
    sweep_users_consensus, Scenario, ALL_ENGINES, DEFAULT_JOB_COUNTS, DEFAULT_UAV_COUNTS,
    DEFAULT_USER_COUNTS,
};

#[derive(Parser)]
#[command(
    name = "birds",
    version,
    about = "Blockchain-coordinated UAV delivery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConsensusArg {
    Poc,
    Pow,
    Poid,
    Poa,
}

impl From<ConsensusArg> for EngineKind {
    fn from(value: ConsensusArg) -> Self {
        match value {
            ConsensusArg::Poc => EngineKind::Poc,
            ConsensusArg::Pow => EngineKind::Pow,
            ConsensusArg::Poid => EngineKind::Poid,
            ConsensusArg::Poa => EngineKind::Poa,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    /// Fleet-size sweep (delay and success rate per UAV count).
    Uavs,
    /// Job-count sweep (estimated vs actual delivery time).
    Jobs,
    /// Fleet sizing per user load for all four consensus engines.
    Users,
    /// Per-round energy timeline for all four consensus engines.
    Energy,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics, summary, and optionally the chain.
    Run {
        /// Scenario config file; defaults apply when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Override the scenario's consensus engine.
        #[arg(long)]
        consensus: Option<ConsensusArg>,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write the full chain as chain.json.
        #[arg(long)]
        dump_chain: bool,
    },
    /// Run an experiment sweep and write its CSV.
    Sweep {
        #[arg(value_enum)]
        which: SweepKind,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Seeds averaged per sweep point.
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        /// Comma-separated sweep points overriding the default list.
        #[arg(long)]
        counts: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<birds_core::simkit::SimError> for AppError {
    fn from(e: birds_core::simkit::SimError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario, AppError> {
    match path {
        None => Ok(Scenario::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| AppError::Config(format!("{}: {e}", p.display())))?;
            parse_scenario(&text).map_err(|e| AppError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn parse_counts(raw: &Option<String>, default: &[u32]) -> Result<Vec<u32>, AppError> {
    match raw {
        None => Ok(default.to_vec()),
        Some(list) => list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| AppError::Config(format!("bad count `{tok}`")))
            })
            .collect(),
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run {
            scenario,
            consensus,
            seed,
            out,
            dump_chain,
        } => {
            let mut sc = load_scenario(&scenario)?;
            if let Some(kind) = consensus {
                sc = sc.with_engine_kind(kind.into());
            }
            if let Some(s) = seed {
                sc.seed = s;
            }
            std::fs::create_dir_all(&out)?;
            let result = run_scenario(&sc)?;
            std::fs::write(out.join("metrics.csv"), &result.csv)?;
            std::fs::write(out.join("summary.json"), result.summary.to_json())?;
            if dump_chain {
                std::fs::write(out.join("chain.json"), result.chain.to_json())?;
            }
            println!(
                "run complete: {} rounds, {} blocks, {}/{} delivered, success rate {:.3}, chain {}",
                result.summary.rounds,
                result.summary.blocks,
                result.summary.delivered,
                result.summary.delivered + result.summary.failed,
                result.summary.success_rate,
                &result.summary.chain_digest[..12],
            );
            Ok(())
        }
        Command::Sweep {
            which,
            scenario,
            seeds,
            counts,
            out,
        } => {
            let base = load_scenario(&scenario)?;
            std::fs::create_dir_all(&out)?;
            let path = |name: &str| out.join(name);
            match which {
                SweepKind::Uavs => {
                    let list = parse_counts(&counts, DEFAULT_UAV_COUNTS)?;
                    let rows = sweep_uav_count(&base, &list, seeds)?;
                    write_rows(&rows, &path("uav_sweep.csv"))?;
                }
                SweepKind::Jobs => {
                    let list = parse_counts(&counts, DEFAULT_JOB_COUNTS)?;
                    let rows = sweep_jobs(&base, &list, seeds)?;
                    write_rows(&rows, &path("job_sweep.csv"))?;
                }
                SweepKind::Users => {
                    let list = parse_counts(&counts, DEFAULT_USER_COUNTS)?;
                    let rows = sweep_users_consensus(&base, &list, &ALL_ENGINES, seeds)?;
                    write_rows(&rows, &path("user_sweep.csv"))?;
                }
                SweepKind::Energy => {
                    let rows = energy_timeline(&base, &ALL_ENGINES)?;
                    write_rows(&rows, &path("energy_timeline.csv"))?;
                }
            }
            Ok(())
        }
    }
}

fn write_rows<R: birds_core::simkit::CsvRow>(rows: &[R], path: &Path) -> Result<(), AppError> {
    emit_csv(rows, path)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}
