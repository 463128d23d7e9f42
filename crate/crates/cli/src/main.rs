//! `itoffoli`: calibration, benchmarking and synthesis pipelines of the
//! cross-resonance iToffoli simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::{Context, ControlArg, Protocol, SynthesisMode, TargetArg};
use config::RunConfig;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "itoffoli", version, about = "Simulate, calibrate and characterize a cross-resonance iToffoli gate")]
struct Cli {
    /// JSON run configuration; every field is optional.
    #[arg(long, global = true, env = "ITOFFOLI_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides `simulation.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the calibration loop and store the calibrated gate.
    Calibrate,
    /// Conditional Rabi traces of the calibrated pulses.
    Rabi {
        #[arg(long, value_enum, default_value = "all")]
        control: ControlArg,
    },
    /// Characterize the calibrated gate under the device noise.
    Benchmark {
        #[arg(long, value_enum)]
        protocol: Protocol,
    },
    /// Recalibrate over a duration grid and decompose the infidelity.
    ErrorBudget,
    /// Threshold depths of circuit synthesis.
    Synthesize {
        #[arg(long, value_enum)]
        mode: SynthesisMode,
        /// Target ensembles for `thresholds`.
        #[arg(long, value_enum, default_value = "both")]
        targets: TargetArg,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", e.to_string()))?;
    }
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.simulation.seed),
        out: cli
            .out
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        config,
    };
    std::fs::create_dir_all(&ctx.out).map_err(|e| CliError::io(&ctx.out, e))?;
    match cli.command {
        Command::Calibrate => commands::calibrate(&ctx).map(|_| ()),
        Command::Rabi { control } => commands::rabi(&ctx, control),
        Command::Benchmark { protocol } => commands::benchmark(&ctx, protocol),
        Command::ErrorBudget => commands::error_budget(&ctx),
        Command::Synthesize { mode, targets } => commands::synthesize(&ctx, mode, targets),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
