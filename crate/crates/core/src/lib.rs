//! Link-level simulation of a dual-polarized reconfigurable intelligent
//! surface used as a 2 × 2 MIMO 16-QAM transmitter.
//!
//! Each polarization's cells are driven with a cyclically shifted phase ramp
//! whose −1st harmonic carries one QAM symbol. The crate covers the
//! received-signal model, the ramp modulator and its Fourier analysis, the
//! varactor control path with cross-polarization coupling, LoS/Rayleigh
//! channels, the ZF receiver and Monte Carlo BER campaigns.

pub mod campaign;
pub mod channel;
pub mod config;
pub mod error;
pub mod export;
pub mod hardware;
pub mod linalg;
pub mod link;
pub mod loopback;
pub mod model;
pub mod modulator;
pub mod oracle;
pub mod qam;
pub mod receiver;

pub use campaign::{run_ber_sweep, CampaignResult, SweepPoint};
pub use channel::{ChannelModelSpec, Geometry, H2Kind};
pub use config::{CampaignConfig, CsiMode, Fidelity, Mode, StreamRelation};
pub use error::{Error, Result};
pub use hardware::{DacResolution, HardwareConfig, PhaseVoltageLut};
pub use linalg::{CMatrix, Matrix2};
pub use loopback::{run_file_loopback, LoopbackOutcome};
pub use model::{AttenuationDiagonal, ChannelSet, Polarization, ReceivedVector, ReflectionVector};
pub use modulator::{HarmonicCoefficient, QamTarget, TmSymbolParams};
pub use num_complex::Complex64;
pub use oracle::{run_oracle_check, OracleReport};
pub use receiver::{BerRecord, PilotBlock};
