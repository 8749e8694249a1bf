//! Received-signal model of the dual-polarized RIS transmitter.
//!
//! Every length-2N or length-2K vector in this crate uses the same wire
//! order: all polarization-0 entries first, then all polarization-1 entries.
//! Cell `n` of polarization `p` lives at index `p * N + n`.
//!
//! Two algebraically equivalent forms of the received vector are provided:
//!
//! * [`received_full`]: `y = √P · H2 · Φ(x) · H1 · c + w`
//! * [`received_reduced`]: `y = √P · H2 · E · x + w`, with `E = diag(H1 · c)`
//!
//! The reduced form shows that the reflection coefficients `x` act directly
//! as the transmitted baseband symbols, attenuated by the fixed feed channel.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Tolerance on `‖c‖ = 1` for the carrier decomposition.
pub const CARRIER_NORM_TOL: f64 = 1e-9;

/// One of the two orthogonal polarizations of the RIS and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Pol0,
    Pol1,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::Pol0, Polarization::Pol1];

    pub fn index(self) -> usize {
        match self {
            Polarization::Pol0 => 0,
            Polarization::Pol1 => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Polarization::Pol0),
            1 => Some(Polarization::Pol1),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Polarization::Pol0 => Polarization::Pol1,
            Polarization::Pol1 => Polarization::Pol0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarization::Pol0 => "pol0",
            Polarization::Pol1 => "pol1",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reflection coefficients of all 2N cell/polarization pairs.
///
/// Entries lie in the closed unit disk: the amplitude reflection coefficient
/// is at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionVector {
    entries: Vec<Complex64>,
}

impl ReflectionVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() || !entries.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "reflection vector length must be a positive even number, got {}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !(v.norm() <= 1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "reflection coefficient {bad} lies outside the unit disk"
            )));
        }
        Ok(Self { entries })
    }

    /// Builds a vector from amplitude/phase pairs.
    pub fn from_polar(amp_phase: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            amp_phase
                .iter()
                .map(|&(a, phi)| Complex64::from_polar(a, phi))
                .collect(),
        )
    }

    /// All N cells of polarization 0 carry `s0`, all of polarization 1 carry `s1`.
    pub fn replicated(cells: usize, s0: Complex64, s1: Complex64) -> Result<Self> {
        let mut entries = vec![s0; cells];
        entries.extend(std::iter::repeat_n(s1, cells));
        Self::new(entries)
    }

    /// Number of unit cells N.
    pub fn cells(&self) -> usize {
        self.entries.len() / 2
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, cell: usize, pol: Polarization) -> Complex64 {
        self.entries[pol.index() * self.cells() + cell]
    }

    /// Entries of one polarization block.
    pub fn block(&self, pol: Polarization) -> &[Complex64] {
        let n = self.cells();
        &self.entries[pol.index() * n..(pol.index() + 1) * n]
    }

    /// Amplitude reflection coefficient `A` of one entry.
    pub fn amplitude(&self, cell: usize, pol: Polarization) -> f64 {
        self.get(cell, pol).norm()
    }

    /// Phase of one entry in `[0, 2π)`.
    pub fn phase(&self, cell: usize, pol: Polarization) -> f64 {
        self.get(cell, pol).arg().rem_euclid(std::f64::consts::TAU)
    }
}

/// Feed and RIS-to-receiver channels plus the carrier split.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Feed antenna to RIS, 2N × 2.
    pub h1: CMatrix,
    /// RIS to receive antennas, 2K × 2N.
    pub h2: CMatrix,
    /// Carrier decomposition over the two feed polarizations.
    pub c: [Complex64; 2],
    pub carrier_power_watts: f64,
    /// Receive antennas per polarization.
    pub k_rx: usize,
}

impl ChannelSet {
    pub fn new(
        h1: CMatrix,
        h2: CMatrix,
        c: [Complex64; 2],
        carrier_power_watts: f64,
    ) -> Result<Self> {
        if h1.cols() != 2 || h1.rows() == 0 || !h1.rows().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "H1 must be 2N x 2, got {} x {}",
                h1.rows(),
                h1.cols()
            )));
        }
        if h2.cols() != h1.rows() {
            return Err(Error::Dimension {
                context: "H2 columns vs 2N",
                expected: h1.rows(),
                actual: h2.cols(),
            });
        }
        if h2.rows() == 0 || !h2.rows().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "H2 must have 2K rows, got {}",
                h2.rows()
            )));
        }
        if !(carrier_power_watts > 0.0 && carrier_power_watts.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "carrier power must be positive, got {carrier_power_watts}"
            )));
        }
        let k_rx = h2.rows() / 2;
        Ok(Self {
            h1,
            h2,
            c,
            carrier_power_watts,
            k_rx,
        })
    }

    pub fn cells(&self) -> usize {
        self.h1.rows() / 2
    }

    pub fn carrier_norm(&self) -> f64 {
        (self.c[0].norm_sqr() + self.c[1].norm_sqr()).sqrt()
    }
}

/// Diagonal of `E = diag(H1 · c)`: the fixed attenuation each of the 2N
/// reflected signals sees from the feed.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationDiagonal {
    entries: Vec<Complex64>,
}

impl AttenuationDiagonal {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn cells(&self) -> usize {
        self.entries.len() / 2
    }
}

/// Received baseband vector, `[y_{1,0} … y_{K,0}, y_{1,1} … y_{K,1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector {
    entries: Vec<Complex64>,
}

impl ReceivedVector {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn antennas_per_pol(&self) -> usize {
        self.entries.len() / 2
    }

    pub fn get(&self, antenna: usize, pol: Polarization) -> Complex64 {
        self.entries[pol.index() * self.antennas_per_pol() + antenna]
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.entries
    }
}

/// Block-diagonal reflection matrix `Φ = diag(Φ0, Φ1)`.
pub fn build_phi(x: &ReflectionVector) -> CMatrix {
    CMatrix::diag(x.as_slice())
}

/// Reads a reflection vector back from the diagonal of `Φ`.
pub fn reflection_from_phi(phi: &CMatrix) -> Result<ReflectionVector> {
    ReflectionVector::new(phi.diagonal())
}

/// Computes `E = diag(H1 · c)`.
pub fn attenuation_from(channels: &ChannelSet) -> Result<AttenuationDiagonal> {
    let norm = channels.carrier_norm();
    if !((norm - 1.0).abs() <= CARRIER_NORM_TOL) {
        return Err(Error::CarrierNorm { norm });
    }
    Ok(AttenuationDiagonal {
        entries: channels.h1.matvec(&channels.c)?,
    })
}

fn check_dims(channels: &ChannelSet, x: &ReflectionVector, noise: &[Complex64]) -> Result<()> {
    if x.as_slice().len() != channels.h1.rows() {
        return Err(Error::Dimension {
            context: "reflection vector vs 2N",
            expected: channels.h1.rows(),
            actual: x.as_slice().len(),
        });
    }
    if noise.len() != channels.h2.rows() {
        return Err(Error::Dimension {
            context: "noise vector vs 2K",
            expected: channels.h2.rows(),
            actual: noise.len(),
        });
    }
    Ok(())
}

/// `y = √P · H2 · Φ(x) · H1 · c + w`, evaluated as `((H2 Φ) H1) c`.
pub fn received_full(
    channels: &ChannelSet,
    x: &ReflectionVector,
    noise: &[Complex64],
) -> Result<ReceivedVector> {
    check_dims(channels, x, noise)?;
    let xs = x.as_slice();
    // H2 · Φ scales column i of H2 by x_i.
    let h2_phi = CMatrix::from_fn(channels.h2.rows(), channels.h2.cols(), |r, c| {
        channels.h2[(r, c)] * xs[c]
    });
    let cascade = h2_phi.matmul(&channels.h1)?;
    let amp = channels.carrier_power_watts.sqrt();
    let signal = cascade.matvec(&channels.c)?;
    Ok(ReceivedVector {
        entries: signal
            .iter()
            .zip(noise)
            .map(|(s, w)| s * amp + w)
            .collect(),
    })
}

/// `y = √P · H2 · E · x + w`.
pub fn received_reduced(
    channels: &ChannelSet,
    e: &AttenuationDiagonal,
    x: &ReflectionVector,
    noise: &[Complex64],
) -> Result<ReceivedVector> {
    check_dims(channels, x, noise)?;
    if e.as_slice().len() != x.as_slice().len() {
        return Err(Error::Dimension {
            context: "attenuation diagonal vs 2N",
            expected: x.as_slice().len(),
            actual: e.as_slice().len(),
        });
    }
    let ex: Vec<Complex64> = e.as_slice().iter().zip(x.as_slice()).map(|(a, b)| a * b).collect();
    let amp = channels.carrier_power_watts.sqrt();
    let signal = channels.h2.matvec(&ex)?;
    Ok(ReceivedVector {
        entries: signal
            .iter()
            .zip(noise)
            .map(|(s, w)| s * amp + w)
            .collect(),
    })
}
