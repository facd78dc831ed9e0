use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orsched::experiments::{self, CmdFailure};
use orsched::orchestrator::EvalPolicy;

#[derive(Parser)]
#[command(name = "orsched", version, about = "eMBB/URLLC coexistence scheduler: training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the agents and write checkpoint.bin, metrics.csv and config.toml.
    Train {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured number of training steps.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Mean eMBB rate and outage across URLLC loads.
    SweepLoad {
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        phis: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
        /// thompson, eps:<value> or random; comma-separated for several.
        #[arg(long, value_delimiter = ',', default_value = "thompson")]
        method: Vec<String>,
        /// Defaults to config.toml next to the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Per-window URLLC error-rate samples and their CDF at one load.
    CdfError {
        checkpoint: PathBuf,
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "thompson")]
        method: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Oracle comparisons, gradient checks and decoder fuzzing.
    Selftest,
}

fn parse_methods(names: &[String]) -> Result<Vec<EvalPolicy>, CmdFailure> {
    names.iter().map(|n| n.parse().map_err(CmdFailure::Usage)).collect()
}

fn run(cli: Cli) -> Result<(), CmdFailure> {
    match cli.command {
        Command::Train { config, seed, out, steps } => experiments::cmd_train(&config, seed, steps, &out),
        Command::SweepLoad { checkpoint, phis, episodes, out, method, config, seed } => {
            let methods = parse_methods(&method)?;
            experiments::cmd_sweep_load(&checkpoint, config.as_deref(), &phis, &methods, episodes, seed, &out)
        }
        Command::CdfError { checkpoint, phi, episodes, out, method, config, seed } => {
            let method = parse_methods(&[method])?.remove(0);
            experiments::cmd_cdf_error(&checkpoint, config.as_deref(), phi, method, episodes, seed, &out)
        }
        Command::Selftest => experiments::cmd_selftest(),
    }
}

fn main() -> ExitCode {
    experiments::init_logging();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
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
