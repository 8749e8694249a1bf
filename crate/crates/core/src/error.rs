use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("carrier decomposition must have unit norm, got {norm}")]
    CarrierNorm { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("QAM target amplitude {0} is not reachable on the -1st harmonic")]
    UnreachableAmplitude(f64),

    #[error("bit sequence length {0} is not a multiple of {1}")]
    BitLength(usize, usize),

    #[error("phase {phase} rad is outside the span covered by the {pol} phase-voltage curve")]
    PhaseOutOfRange { phase: f64, pol: &'static str },

    #[error("malformed phase-voltage table: {0}")]
    Lut(String),

    #[error("pilot matrix is rank deficient")]
    RankDeficientPilots,

    #[error("channel matrix is near singular (condition number {condition:e})")]
    SingularChannel { condition: f64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;
