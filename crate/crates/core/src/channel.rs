//! Propagation: feed-to-RIS and RIS-to-receiver channels, carrier split,
//! the aggregated 2 × 2 stream channel and receiver noise.
//!
//! Cells sit on a planar grid in the `z = 0` plane centred on the origin,
//! columns along `x` and rows along `y`; cell `n = row · cols + col`. The
//! feed and receive antennas are points in front of the surface.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{AttenuationDiagonal, ChannelSet};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Placement of the feed, surface and receive antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub carrier_frequency_hz: f64,
    /// Feed antenna height above the surface centre.
    pub feed_distance_m: f64,
    /// Height of the default receive position above the surface centre.
    pub rx_distance_m: f64,
    pub feed_polarization_angle_deg: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Cell pitch along `x` (columns).
    pub pitch_x_m: f64,
    /// Cell pitch along `y` (rows).
    pub pitch_y_m: f64,
    /// Receive antenna positions, one per antenna and shared by both
    /// polarizations. Empty means a single antenna on boresight at
    /// `rx_distance_m`.
    pub rx_positions_m: Vec<[f64; 3]>,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 2.7e9,
            feed_distance_m: 0.8,
            rx_distance_m: 1.6,
            feed_polarization_angle_deg: 45.0,
            grid_rows: 12,
            grid_cols: 12,
            pitch_x_m: 0.036,
            pitch_y_m: 0.025,
            rx_positions_m: Vec::new(),
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl Geometry {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn cells(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn feed_position(&self) -> [f64; 3] {
        [0.0, 0.0, self.feed_distance_m]
    }

    pub fn rx_positions(&self) -> Vec<[f64; 3]> {
        if self.rx_positions_m.is_empty() {
            vec![[0.0, 0.0, self.rx_distance_m]]
        } else {
            self.rx_positions_m.clone()
        }
    }

    /// Centre of cell `n`.
    pub fn cell_position(&self, n: usize) -> [f64; 3] {
        let (row, col) = (n / self.grid_cols, n % self.grid_cols);
        let x = (col as f64 - (self.grid_cols as f64 - 1.0) / 2.0) * self.pitch_x_m;
        let y = (row as f64 - (self.grid_rows as f64 - 1.0) / 2.0) * self.pitch_y_m;
        [x, y, 0.0]
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        for (name, v) in [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("feed_distance_m", self.feed_distance_m),
            ("rx_distance_m", self.rx_distance_m),
            ("pitch_x_m", self.pitch_x_m),
            ("pitch_y_m", self.pitch_y_m),
        ] {
            if !positive(v) {
                issues.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=90.0).contains(&self.feed_polarization_angle_deg) {
            issues.push(format!(
                "feed_polarization_angle_deg must lie in [0, 90], got {}",
                self.feed_polarization_angle_deg
            ));
        }
        if self.cells() == 0 {
            issues.push("grid_rows and grid_cols must be at least 1".into());
        }
        for (i, p) in self.rx_positions_m.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                issues.push(format!("rx_positions_m[{i}] must be finite"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H2Kind {
    LosGeometric,
    IidRayleigh,
}

/// RIS-to-receiver channel model and receiver noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModelSpec {
    pub h2_kind: H2Kind,
    /// Co- to cross-polarized power ratio of H2; `inf` means no leakage.
    pub cross_polarization_discrimination_db: f64,
    /// Noise power for fixed-noise runs. BER sweeps derive it from Eb/N0.
    pub noise_power_watts: f64,
    pub carrier_power_watts: f64,
    pub rng_seed: u64,
}

impl Default for ChannelModelSpec {
    fn default() -> Self {
        Self {
            h2_kind: H2Kind::LosGeometric,
            cross_polarization_discrimination_db: f64::INFINITY,
            noise_power_watts: 1e-12,
            carrier_power_watts: 1.0,
            rng_seed: 0,
        }
    }
}

impl ChannelModelSpec {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        if !(self.cross_polarization_discrimination_db >= 0.0) {
            issues.push(format!(
                "cross_polarization_discrimination_db must be non-negative, got {}",
                self.cross_polarization_discrimination_db
            ));
        }
        if !positive(self.noise_power_watts) {
            issues.push(format!("noise_power_watts must be positive, got {}", self.noise_power_watts));
        }
        if !positive(self.carrier_power_watts) {
            issues.push(format!(
                "carrier_power_watts must be positive, got {}",
                self.carrier_power_watts
            ));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Amplitude factor applied to the cross-polarized blocks of H2.
    pub fn cross_factor(&self) -> f64 {
        let xpd = self.cross_polarization_discrimination_db;
        if xpd.is_infinite() {
            0.0
        } else {
            10f64.powf(-xpd / 20.0)
        }
    }
}

/// Free-space kernel `λ/(4πd) · e^{−j2πd/λ}`.
pub fn free_space_gain(distance_m: f64, wavelength_m: f64) -> Complex64 {
    Complex64::from_polar(wavelength_m / (4.0 * PI * distance_m), -2.0 * PI * distance_m / wavelength_m)
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `c = [cos θ, sin θ]` for a feed rotated by `θ` degrees.
pub fn carrier_decomposition(angle_deg: f64) -> Result<[Complex64; 2]> {
    if !(0.0..=90.0).contains(&angle_deg) {
        return Err(Error::InvalidParameter(format!(
            "feed polarization angle must lie in [0, 90] degrees, got {angle_deg}"
        )));
    }
    let (s, c) = angle_deg.to_radians().sin_cos();
    Ok([Complex64::new(c, 0.0), Complex64::new(s, 0.0)])
}

/// Feed-to-RIS channel, 2N × 2. Cross-polarized blocks are zero.
pub fn build_h1_los(geometry: &Geometry) -> CMatrix {
    let n = geometry.cells();
    let lambda = geometry.wavelength();
    let feed = geometry.feed_position();
    let gains: Vec<Complex64> = (0..n)
        .map(|i| free_space_gain(distance(feed, geometry.cell_position(i)), lambda))
        .collect();
    CMatrix::from_fn(2 * n, 2, |r, c| {
        if r / n == c {
            gains[r % n]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// RIS-to-receiver channel, 2K × 2N.
pub fn build_h2(geometry: &Geometry, spec: &ChannelModelSpec) -> CMatrix {
    let n = geometry.cells();
    let rx = geometry.rx_positions();
    let k = rx.len();
    let cross = spec.cross_factor();
    let base = match spec.h2_kind {
        H2Kind::LosGeometric => {
            let lambda = geometry.wavelength();
            CMatrix::from_fn(2 * k, 2 * n, |r, c| {
                free_space_gain(distance(rx[r % k], geometry.cell_position(c % n)), lambda)
            })
        }
        H2Kind::IidRayleigh => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            CMatrix::from_fn(2 * k, 2 * n, |_, _| complex_normal(&mut rng, 1.0))
        }
    };
    CMatrix::from_fn(2 * k, 2 * n, |r, c| {
        if r / k == c / n {
            base[(r, c)]
        } else {
            base[(r, c)] * cross
        }
    })
}

/// Builds the full channel set for a geometry and channel model.
pub fn build_channel_set(geometry: &Geometry, spec: &ChannelModelSpec) -> Result<ChannelSet> {
    ChannelSet::new(
        build_h1_los(geometry),
        build_h2(geometry, spec),
        carrier_decomposition(geometry.feed_polarization_angle_deg)?,
        spec.carrier_power_watts,
    )
}

/// Per-stream channel, 2K × 2: entry `(row, q)` sums `√P · H2[row, ·] · E`
/// over the cells of polarization `q`, so that `y = G · [s0, s1]ᵀ + w` when
/// every cell of polarization `q` carries `s_q`.
pub fn effective_stream_channel(
    h2: &CMatrix,
    e: &AttenuationDiagonal,
    carrier_power_watts: f64,
) -> Result<CMatrix> {
    let ed = e.as_slice();
    if h2.cols() != ed.len() {
        return Err(Error::Dimension {
            context: "H2 columns vs attenuation diagonal",
            expected: ed.len(),
            actual: h2.cols(),
        });
    }
    let n = e.cells();
    let amp = carrier_power_watts.sqrt();
    Ok(CMatrix::from_fn(h2.rows(), 2, |r, q| {
        let row = h2.row(r);
        (q * n..(q + 1) * n).map(|i| row[i] * ed[i]).sum::<Complex64>() * amp
    }))
}

/// One circular complex Gaussian draw with variance `power`.
pub fn complex_normal(rng: &mut impl Rng, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    Complex64::new(
        rng.sample::<f64, _>(StandardNormal) * s,
        rng.sample::<f64, _>(StandardNormal) * s,
    )
}

/// Circular complex Gaussian noise with per-entry variance `noise_power`.
pub fn awgn(len: usize, noise_power: f64, rng: &mut impl Rng) -> Result<Vec<Complex64>> {
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise power must be non-negative, got {noise_power}"
        )));
    }
    if noise_power == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); len]);
    }
    Ok((0..len).map(|_| complex_normal(rng, noise_power)).collect())
}
