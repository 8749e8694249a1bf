//! Campaign configuration file.
//!
//! A single TOML document. Every key is optional; an empty file yields the
//! prototype scenario (2.7 GHz, 12 × 12 cells, 0.8 m / 1.6 m, 45° feed,
//! 2.5 MSps, 16 dB isolation). Unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelModelSpec, Geometry};
use crate::error::{Error, Result};
use crate::hardware::HardwareConfig;
use crate::modulator::DEFAULT_SAMPLES_PER_SYMBOL;
use crate::qam::BITS_PER_SYMBOL;
use crate::receiver::{DEFAULT_MAX_CONDITION, DEFAULT_PILOT_LEN};

pub const MIN_BITS_PER_POINT: u64 = 10_000;
pub const STREAMS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    BerSweep,
    OracleCheck,
    WaveformExport,
    FileLoopback,
}

/// Simulation level: closed-form symbols or sampled waveforms through the
/// hardware model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fidelity {
    A,
    B,
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fidelity::A => "A",
            Fidelity::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamRelation {
    Independent,
    Identical,
}

impl fmt::Display for StreamRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamRelation::Independent => "independent",
            StreamRelation::Identical => "identical",
        })
    }
}

/// Where the detector's channel knowledge comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Perfect,
    Pilot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ebn0_db: Vec<f64>,
    pub bits_per_point: u64,
    pub fidelity: Fidelity,
    pub coupling: bool,
    pub stream_relation: StreamRelation,
    pub csi: CsiMode,
    pub pilot_length: usize,
    pub samples_per_symbol: usize,
    pub max_condition: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ebn0_db: vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
            bits_per_point: 1_000_000,
            fidelity: Fidelity::A,
            coupling: false,
            stream_relation: StreamRelation::Independent,
            csi: CsiMode::Perfect,
            pilot_length: DEFAULT_PILOT_LEN,
            samples_per_symbol: DEFAULT_SAMPLES_PER_SYMBOL,
            max_condition: DEFAULT_MAX_CONDITION,
        }
    }
}

/// Deliberate defects for checking that the oracle suites catch them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Negates the closed-form harmonic phase.
    HarmonicPhaseSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub cases_per_suite: usize,
    pub harmonic_tolerance: f64,
    pub model_tolerance: f64,
    pub max_cells: usize,
    pub max_rx_antennas: usize,
    pub parseval_max_order: i32,
    pub inject_fault: Option<Fault>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            cases_per_suite: 1000,
            harmonic_tolerance: 1e-9,
            model_tolerance: 1e-12,
            max_cells: 64,
            max_rx_antennas: 4,
            parseval_max_order: 200,
            inject_fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub delta_phi_rad: f64,
    /// Cyclic shift as a fraction of the symbol period.
    pub shift_fraction: f64,
    pub samples: usize,
    pub max_harmonic: i32,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            delta_phi_rad: std::f64::consts::PI,
            shift_fraction: 0.25,
            samples: DEFAULT_SAMPLES_PER_SYMBOL,
            max_harmonic: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopbackConfig {
    pub ebn0_db: f64,
    pub coupling: bool,
    /// Input for `run` in `file_loopback` mode; the subcommand takes a flag.
    pub input_file: Option<PathBuf>,
}

impl Default for LoopbackConfig {
    fn default() -> Self {
        Self {
            ebn0_db: 30.0,
            coupling: false,
            input_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub seed: u64,
    pub symbol_rate_sps: f64,
    /// Measured phase–voltage table; the synthetic curves are used when unset.
    pub lut_file: Option<PathBuf>,
    pub sweep: SweepConfig,
    pub oracle: OracleConfig,
    pub waveform: WaveformConfig,
    pub loopback: LoopbackConfig,
    pub geometry: Geometry,
    pub channel: ChannelModelSpec,
    pub hardware: HardwareConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            mode: Mode::BerSweep,
            seed: 1,
            symbol_rate_sps: 2.5e6,
            lut_file: None,
            sweep: SweepConfig::default(),
            oracle: OracleConfig::default(),
            waveform: WaveformConfig::default(),
            loopback: LoopbackConfig::default(),
            geometry: Geometry::default(),
            channel: ChannelModelSpec::default(),
            hardware: HardwareConfig::default(),
        }
    }
}

fn prefixed(section: &str, issues: std::result::Result<(), Vec<String>>) -> Vec<String> {
    issues
        .err()
        .unwrap_or_default()
        .into_iter()
        .map(|m| format!("{section}.{m}"))
        .collect()
}

impl CampaignConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        config.validate().map_err(Error::Config)?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Lists every problem, each prefixed with its key path.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        if !(self.symbol_rate_sps > 0.0 && self.symbol_rate_sps.is_finite()) {
            issues.push(format!("symbol_rate_sps must be positive, got {}", self.symbol_rate_sps));
        }
        let s = &self.sweep;
        if s.ebn0_db.is_empty() {
            issues.push("sweep.ebn0_db must not be empty".into());
        }
        for (i, v) in s.ebn0_db.iter().enumerate() {
            if !v.is_finite() {
                issues.push(format!("sweep.ebn0_db[{i}] must be finite, got {v}"));
            }
        }
        if s.bits_per_point < MIN_BITS_PER_POINT {
            issues.push(format!(
                "sweep.bits_per_point must be at least {MIN_BITS_PER_POINT}, got {}",
                s.bits_per_point
            ));
        }
        if s.pilot_length < 2 || !s.pilot_length.is_multiple_of(2) {
            issues.push(format!("sweep.pilot_length must be even and at least 2, got {}", s.pilot_length));
        }
        if s.samples_per_symbol < 2 {
            issues.push(format!(
                "sweep.samples_per_symbol must be at least 2, got {}",
                s.samples_per_symbol
            ));
        }
        if !(s.max_condition >= 1.0) {
            issues.push(format!("sweep.max_condition must be at least 1, got {}", s.max_condition));
        }
        let o = &self.oracle;
        if o.cases_per_suite == 0 {
            issues.push("oracle.cases_per_suite must be positive".into());
        }
        if !(o.harmonic_tolerance > 0.0) || !(o.model_tolerance > 0.0) {
            issues.push("oracle tolerances must be positive".into());
        }
        if o.max_cells == 0 || o.max_rx_antennas == 0 {
            issues.push("oracle.max_cells and oracle.max_rx_antennas must be positive".into());
        }
        if o.parseval_max_order < 1 {
            issues.push(format!(
                "oracle.parseval_max_order must be positive, got {}",
                o.parseval_max_order
            ));
        }
        let w = &self.waveform;
        if !(w.delta_phi_rad > 0.0 && w.delta_phi_rad <= std::f64::consts::TAU) {
            issues.push(format!("waveform.delta_phi_rad must lie in (0, 2π], got {}", w.delta_phi_rad));
        }
        if !(0.0..1.0).contains(&w.shift_fraction) {
            issues.push(format!("waveform.shift_fraction must lie in [0, 1), got {}", w.shift_fraction));
        }
        if w.samples < 2 {
            issues.push(format!("waveform.samples must be at least 2, got {}", w.samples));
        }
        if w.max_harmonic < 1 {
            issues.push(format!("waveform.max_harmonic must be positive, got {}", w.max_harmonic));
        }
        if !self.loopback.ebn0_db.is_finite() {
            issues.push(format!("loopback.ebn0_db must be finite, got {}", self.loopback.ebn0_db));
        }
        issues.extend(prefixed("geometry", self.geometry.validate()));
        issues.extend(prefixed("channel", self.channel.validate()));
        issues.extend(prefixed("hardware", self.hardware.validate()));
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Hardware settings with coupling switched on or off.
    pub fn hardware_with_coupling(&self, coupling: bool) -> HardwareConfig {
        let mut hw = self.hardware;
        if !coupling {
            hw.isolation_db = f64::INFINITY;
        }
        hw
    }
}

/// Aggregate bit rate: streams × bits per symbol × symbol rate.
pub fn throughput_bps(symbol_rate_sps: f64) -> f64 {
    (STREAMS * BITS_PER_SYMBOL) as f64 * symbol_rate_sps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = CampaignConfig::from_toml("").unwrap();
        assert_eq!(c, CampaignConfig::default());
        assert_eq!(c.geometry.cells(), 144);
        assert_eq!(c.hardware.isolation_db, 16.0);
        assert_eq!(c.sweep.ebn0_db, vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
    }

    #[test]
    fn default_throughput_is_twenty_mbps() {
        assert_eq!(throughput_bps(CampaignConfig::default().symbol_rate_sps), 20e6);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = CampaignConfig::default();
        c.sweep.fidelity = Fidelity::B;
        c.oracle.inject_fault = Some(Fault::HarmonicPhaseSign);
        c.hardware.dac_bits = crate::hardware::DacResolution::Bits(10);
        let back = CampaignConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert!(back.channel.cross_polarization_discrimination_db.is_infinite());
    }

    #[test]
    fn hash_tracks_content() {
        let a = CampaignConfig::default();
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn issues_carry_paths() {
        let text = "[sweep]\nebn0_db = []\nbits_per_point = 10\n[geometry]\nfeed_distance_m = -1.0\n";
        match CampaignConfig::from_toml(text) {
            Err(Error::Config(issues)) => {
                assert!(issues.iter().any(|m| m.starts_with("sweep.ebn0_db")));
                assert!(issues.iter().any(|m| m.starts_with("sweep.bits_per_point")));
                assert!(issues.iter().any(|m| m.starts_with("geometry.feed_distance_m")));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = CampaignConfig::from_toml("[sweep]\nebno = [1.0]\n").unwrap_err();
        assert!(err.to_string().contains("ebno"));
        assert!(CampaignConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn dac_accepts_name_or_bits() {
        let c = CampaignConfig::from_toml("[hardware]\ndac_bits = \"ideal\"\n").unwrap();
        assert_eq!(c.hardware.dac_bits, crate::hardware::DacResolution::Ideal);
        let c = CampaignConfig::from_toml("[hardware]\ndac_bits = 8\n").unwrap();
        assert_eq!(c.hardware.dac_bits, crate::hardware::DacResolution::Bits(8));
    }
}
