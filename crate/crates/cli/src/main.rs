//! `risim`: BER sweeps, oracle self-checks, file loopback and waveform
//! export for the dual-polarized RIS link simulator.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "risim", version, about = "Dual-polarized RIS MIMO-QAM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML campaign configuration; defaults reproduce the prototype setup.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo BER over the configured Eb/N0 grid, written as CSV.
    BerSweep(Common),
    /// Closed-form, model-identity and Parseval self-checks.
    OracleCheck(Common),
    /// Sends a file through the waveform-level link and writes what arrives.
    FileLoopback {
        #[command(flatten)]
        common: Common,
        /// File to transmit.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// One sampled symbol of the phase ramp and its harmonics, as CSV.
    ExportWaveform(Common),
    /// Runs whatever `mode` the configuration names.
    Run(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BerSweep(c) => commands::ber_sweep(&c),
        Command::OracleCheck(c) => commands::oracle_check(&c),
        Command::FileLoopback { common, input } => commands::file_loopback(&common, &input),
        Command::ExportWaveform(c) => commands::export_waveform(&c),
        Command::Run(c) => commands::run(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::OracleFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
