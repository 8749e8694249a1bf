use std::fmt;
use std::fs;
use std::path::Path;

use risim_core::campaign::{load_lut, PENALTY_TARGET_BER};
use risim_core::config::STREAMS;
use risim_core::export::export_waveform as render_waveform;
use risim_core::qam::BITS_PER_SYMBOL;
use risim_core::{run_ber_sweep, run_file_loopback, run_oracle_check, CampaignConfig, Error, Mode};
use serde::Serialize;

use crate::output::{check_writable, sidecar, write};
use crate::Common;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    OracleFailed,
    Io(String),
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::OracleFailed => 3,
            CliError::Io(_) => 4,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Run(m) => f.write_str(m),
            CliError::OracleFailed => f.write_str("oracle check failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Lut(_) => CliError::Config(e.to_string()),
            Error::Io(m) => CliError::Io(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

fn load_config(common: &Common) -> Result<CampaignConfig, CliError> {
    let mut config = match &common.config {
        None => CampaignConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            CampaignConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    config_hash: &'a str,
    seed: u64,
    version: &'a str,
    wall_time_s: f64,
    throughput_bps: f64,
    snr_penalty_db_at_1e_4: Option<f64>,
}

pub fn ber_sweep(common: &Common) -> Result<(), CliError> {
    let config = load_config(common)?;
    run_sweep(common, &config)
}

fn run_sweep(common: &Common, config: &CampaignConfig) -> Result<(), CliError> {
    let meta_path = common.out.as_deref().map(sidecar);
    let targets: Vec<&Path> = common.out.iter().map(|p| p.as_path()).chain(meta_path.as_deref()).collect();
    check_writable(&targets, common.force)?;

    let lut = load_lut(config)?;
    let result = run_ber_sweep(config, &lut, common.threads.map(|t| t as usize))?;
    write(common.out.as_deref(), result.to_csv().as_bytes())?;

    let penalty = result.snr_penalty_db(PENALTY_TARGET_BER);
    if let Some(meta) = meta_path {
        let m = SweepMeta {
            config_hash: &result.config_hash,
            seed: result.seed,
            version: &result.version,
            wall_time_s: result.wall_time_s,
            throughput_bps: result.throughput_bps,
            snr_penalty_db_at_1e_4: penalty.is_finite().then_some(penalty),
        };
        let json = serde_json::to_string_pretty(&m).expect("metadata serializes");
        write(Some(&meta), json.as_bytes())?;
    }
    eprintln!(
        "throughput: {} bps ({} streams x {} bits x {} Sps)",
        result.throughput_bps, STREAMS, BITS_PER_SYMBOL, config.symbol_rate_sps
    );
    eprintln!("SNR penalty at BER {PENALTY_TARGET_BER:e}: {penalty:.2} dB");
    eprintln!("wall time: {:.2} s", result.wall_time_s);
    Ok(())
}

pub fn oracle_check(common: &Common) -> Result<(), CliError> {
    let config = load_config(common)?;
    run_oracle(common, &config)
}

fn run_oracle(common: &Common, config: &CampaignConfig) -> Result<(), CliError> {
    if let Some(out) = &common.out {
        check_writable(&[out], common.force)?;
    }
    let report = run_oracle_check(&config.oracle, config.seed)?;
    let text = format!("# config_hash={} seed={}\n{report}", config.hash(), config.seed);
    write(common.out.as_deref(), text.as_bytes())?;
    if common.out.is_some() {
        eprint!("{report}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::OracleFailed)
    }
}

pub fn file_loopback(common: &Common, input: &Path) -> Result<(), CliError> {
    let config = load_config(common)?;
    run_loopback(common, &config, input)
}

fn run_loopback(common: &Common, config: &CampaignConfig, input: &Path) -> Result<(), CliError> {
    let out = common
        .out
        .as_deref()
        .ok_or_else(|| CliError::Config("file-loopback needs --out".into()))?;
    check_writable(&[out], common.force)?;
    let data = fs::read(input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let lut = load_lut(config)?;
    let outcome = run_file_loopback(&data, config, &lut)?;
    write(Some(out), &outcome.output)?;
    match outcome.record {
        Some(r) => eprintln!(
            "bytes={} bits={} bit_errors={} ber={} ci_halfwidth={} identical={}",
            data.len(),
            r.bits_sent,
            r.bit_errors,
            r.ber,
            r.wilson_interval_halfwidth,
            outcome.output == data
        ),
        None => eprintln!("bytes=0 bits=0 bit_errors=0 identical=true"),
    }
    Ok(())
}

pub fn export_waveform(common: &Common) -> Result<(), CliError> {
    let config = load_config(common)?;
    run_export(common, &config)
}

fn run_export(common: &Common, config: &CampaignConfig) -> Result<(), CliError> {
    if let Some(out) = &common.out {
        check_writable(&[out], common.force)?;
    }
    let csv = render_waveform(&config.waveform, 1.0 / config.symbol_rate_sps, &config.hash())?;
    write(common.out.as_deref(), csv.as_bytes())
}

pub fn run(common: &Common) -> Result<(), CliError> {
    let config = load_config(common)?;
    match config.mode {
        Mode::BerSweep => run_sweep(common, &config),
        Mode::OracleCheck => run_oracle(common, &config),
        Mode::WaveformExport => run_export(common, &config),
        Mode::FileLoopback => {
            let input = config
                .loopback
                .input_file
                .clone()
                .ok_or_else(|| CliError::Config("loopback.input_file is required in file_loopback mode".into()))?;
            run_loopback(common, &config, &input)
        }
    }
}
