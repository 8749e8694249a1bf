//! RIS control path: phase–voltage curves, DAC, amplitude ripple and the
//! coupling between the two varactor networks.
//!
//! The intended reflection phase of each polarization is turned into a bias
//! voltage through that polarization's phase–voltage curve, quantized by the
//! DAC, disturbed by the AC component leaking in from the other
//! polarization's control line, and mapped back to the phase the cell
//! actually realizes.

use std::f64::consts::TAU;
use std::io::Read;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Polarization;
use crate::modulator::TmSymbolParams;

/// Measured isolation between the two varactor networks of the prototype.
pub const DEFAULT_ISOLATION_DB: f64 = 16.0;

const SPAN_TOL: f64 = 1e-12;

/// Monotone bias-voltage ↔ phase-shift transfer curve of one polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVoltageCurve {
    volts: Vec<f64>,
    phases: Vec<f64>,
}

impl PhaseVoltageCurve {
    /// Breakpoints must be strictly increasing in both voltage and phase.
    pub fn new(volts: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if volts.len() != phases.len() {
            return Err(Error::Lut(format!(
                "{} voltages but {} phases",
                volts.len(),
                phases.len()
            )));
        }
        if volts.len() < 2 {
            return Err(Error::Lut("need at least two breakpoints".into()));
        }
        if volts.iter().chain(&phases).any(|v| !v.is_finite()) {
            return Err(Error::Lut("non-finite breakpoint".into()));
        }
        for w in volts.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Lut(format!(
                    "voltage not strictly increasing at {} V",
                    w[1]
                )));
            }
        }
        for w in phases.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Lut(format!(
                    "phase not strictly increasing at {} rad",
                    w[1]
                )));
            }
        }
        Ok(Self { volts, phases })
    }

    /// Samples a monotone function on `[v_min, v_max]` with `points` breakpoints.
    pub fn sampled(v_min: f64, v_max: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let volts: Vec<f64> = (0..points)
            .map(|i| v_min + (v_max - v_min) * i as f64 / (points - 1) as f64)
            .collect();
        let phases = volts.iter().map(|&v| f(v)).collect();
        Self::new(volts, phases)
    }

    pub fn voltage_range(&self) -> (f64, f64) {
        (self.volts[0], self.volts[self.volts.len() - 1])
    }

    pub fn phase_range(&self) -> (f64, f64) {
        (self.phases[0], self.phases[self.phases.len() - 1])
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.volts.iter().copied().zip(self.phases.iter().copied())
    }

    fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[i - 1], xs[i]);
        let (y0, y1) = (ys[i - 1], ys[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Piecewise-linear phase at a voltage already inside the domain.
    fn phase_at(&self, v: f64) -> f64 {
        Self::interpolate(&self.volts, &self.phases, v)
    }

    fn voltage_at(&self, phase: f64) -> f64 {
        Self::interpolate(&self.phases, &self.volts, phase)
    }

    /// Brings a phase into the covered span, trying the 2π-equivalents.
    fn reduce_phase(&self, phase: f64) -> Option<f64> {
        let (lo, hi) = self.phase_range();
        let inside = |p: f64| p >= lo - SPAN_TOL && p <= hi + SPAN_TOL;
        let base = phase.rem_euclid(TAU);
        [phase, base, base + TAU, base - TAU]
            .into_iter()
            .find(|&p| inside(p))
            .map(|p| p.clamp(lo, hi))
    }
}

/// Phase–voltage curves of both polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVoltageLut {
    curves: [PhaseVoltageCurve; 2],
}

/// Counts voltages that fell outside a curve's domain and were clipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClipCounter {
    pub per_pol: [u64; 2],
}

impl ClipCounter {
    pub fn total(&self) -> u64 {
        self.per_pol[0] + self.per_pol[1]
    }
}

/// Normalized tanh curve spanning exactly `[0, 2π]` over `[v_min, v_max]`.
fn tanh_curve(v_min: f64, v_max: f64, center: f64, slope: f64) -> impl Fn(f64) -> f64 {
    let lo = ((v_min - center) / slope).tanh();
    let hi = ((v_max - center) / slope).tanh();
    move |v| TAU * (((v - center) / slope).tanh() - lo) / (hi - lo)
}

impl PhaseVoltageLut {
    pub fn new(pol0: PhaseVoltageCurve, pol1: PhaseVoltageCurve) -> Self {
        Self {
            curves: [pol0, pol1],
        }
    }

    /// Synthetic default curves.
    ///
    /// These are not measurements. Both are tanh shapes over 0–20 V
    /// (polarization 0 centred at 10 V with a 4 V scale, polarization 1 at
    /// 8 V with a 5 V scale), rescaled so each spans exactly 0 to 2π, and
    /// sampled every 50 mV.
    pub fn default_synthetic() -> Self {
        let pol0 = PhaseVoltageCurve::sampled(0.0, 20.0, 401, tanh_curve(0.0, 20.0, 10.0, 4.0))
            .expect("default curve is monotone");
        let pol1 = PhaseVoltageCurve::sampled(0.0, 20.0, 401, tanh_curve(0.0, 20.0, 8.0, 5.0))
            .expect("default curve is monotone");
        Self::new(pol0, pol1)
    }

    /// The analytic function behind [`PhaseVoltageLut::default_synthetic`].
    pub fn default_curve_fn(pol: Polarization) -> impl Fn(f64) -> f64 {
        match pol {
            Polarization::Pol0 => tanh_curve(0.0, 20.0, 10.0, 4.0),
            Polarization::Pol1 => tanh_curve(0.0, 20.0, 8.0, 5.0),
        }
    }

    /// Loads curves from CSV with header `polarization,voltage_volts,phase_degrees`.
    ///
    /// The polarization column accepts `0`/`1` or `pol0`/`pol1`. Rows of one
    /// polarization must be strictly increasing in voltage and phase.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Lut(e.to_string()))?.clone();
        let expected = ["polarization", "voltage_volts", "phase_degrees"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Lut(format!(
                "expected header {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut cols: [(Vec<f64>, Vec<f64>); 2] = Default::default();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Lut(e.to_string()))?;
            let row = line + 2;
            let pol = match &rec[0] {
                "0" | "pol0" => 0,
                "1" | "pol1" => 1,
                other => return Err(Error::Lut(format!("row {row}: unknown polarization {other:?}"))),
            };
            let parse = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Lut(format!("row {row}: bad {what} {s:?}")))
            };
            cols[pol].0.push(parse(&rec[1], "voltage")?);
            cols[pol].1.push(parse(&rec[2], "phase")?.to_radians());
        }
        let [(v0, p0), (v1, p1)] = cols;
        let c0 = PhaseVoltageCurve::new(v0, p0).map_err(|e| Error::Lut(format!("pol0: {e}")))?;
        let c1 = PhaseVoltageCurve::new(v1, p1).map_err(|e| Error::Lut(format!("pol1: {e}")))?;
        Ok(Self::new(c0, c1))
    }

    /// Writes the curves in the format read by [`PhaseVoltageLut::from_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("polarization,voltage_volts,phase_degrees\n");
        for pol in Polarization::ALL {
            for (v, p) in self.curve(pol).breakpoints() {
                out.push_str(&format!("{},{v},{}\n", pol.index(), p.to_degrees()));
            }
        }
        out
    }

    pub fn curve(&self, pol: Polarization) -> &PhaseVoltageCurve {
        &self.curves[pol.index()]
    }

    /// Bias voltage that realizes `phase` (reduced modulo 2π if needed).
    pub fn phase_to_voltage(&self, phase: f64, pol: Polarization) -> Result<f64> {
        let curve = self.curve(pol);
        let p = curve.reduce_phase(phase).ok_or(Error::PhaseOutOfRange {
            phase,
            pol: pol.name(),
        })?;
        Ok(curve.voltage_at(p))
    }

    /// Phase realized at bias voltage `v`. Voltages outside the curve's
    /// domain saturate at the nearest end and are counted in `clips`.
    pub fn voltage_to_phase(&self, v: f64, pol: Polarization, clips: &mut ClipCounter) -> f64 {
        let curve = self.curve(pol);
        let (lo, hi) = curve.voltage_range();
        let clamped = if v < lo || v > hi {
            clips.per_pol[pol.index()] += 1;
            v.clamp(lo, hi)
        } else {
            v
        };
        curve.phase_at(clamped)
    }
}

impl Default for PhaseVoltageLut {
    fn default() -> Self {
        Self::default_synthetic()
    }
}

/// DAC resolution: ideal, or a uniform quantizer with `2^bits` levels over the
/// curve's voltage domain. Serialized as `"ideal"` or a bit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "DacRepr", into = "DacRepr")]
pub enum DacResolution {
    #[default]
    Ideal,
    Bits(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DacRepr {
    Bits(u32),
    Name(String),
}

impl TryFrom<DacRepr> for DacResolution {
    type Error = String;

    fn try_from(r: DacRepr) -> std::result::Result<Self, String> {
        match r {
            DacRepr::Bits(b) => Ok(DacResolution::Bits(b)),
            DacRepr::Name(s) if s == "ideal" => Ok(DacResolution::Ideal),
            DacRepr::Name(s) => Err(format!("expected \"ideal\" or a bit count, got {s:?}")),
        }
    }
}

impl From<DacResolution> for DacRepr {
    fn from(d: DacResolution) -> Self {
        match d {
            DacResolution::Ideal => DacRepr::Name("ideal".into()),
            DacResolution::Bits(b) => DacRepr::Bits(b),
        }
    }
}

impl DacResolution {
    pub fn quantize(&self, v: f64, range: (f64, f64)) -> f64 {
        match *self {
            DacResolution::Ideal => v,
            DacResolution::Bits(bits) => {
                let (lo, hi) = range;
                let levels = (1u64 << bits.min(52)) - 1;
                let step = (hi - lo) / levels as f64;
                let code = ((v - lo) / step).round().clamp(0.0, levels as f64);
                lo + code * step
            }
        }
    }
}

/// Hardware impairment settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    /// Isolation between the two control lines; `inf` disables coupling.
    pub isolation_db: f64,
    pub dac_bits: DacResolution,
    /// Peak-to-peak amplitude ripple over the voltage domain.
    pub amplitude_ripple_db: f64,
    pub base_reflection_amplitude: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            isolation_db: DEFAULT_ISOLATION_DB,
            dac_bits: DacResolution::Ideal,
            amplitude_ripple_db: 1.0,
            // ≈ −1.5 dB
            base_reflection_amplitude: 0.84,
        }
    }
}

impl HardwareConfig {
    /// No coupling, ideal DAC, no ripple, lossless reflection.
    pub fn ideal() -> Self {
        Self {
            isolation_db: f64::INFINITY,
            dac_bits: DacResolution::Ideal,
            amplitude_ripple_db: 0.0,
            base_reflection_amplitude: 1.0,
        }
    }

    pub fn coupling_factor(&self) -> f64 {
        coupling_factor(self.isolation_db)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        if !(self.isolation_db > 0.0) {
            issues.push(format!("isolation_db must be positive, got {}", self.isolation_db));
        }
        if let DacResolution::Bits(b) = self.dac_bits {
            if !(1..=32).contains(&b) {
                issues.push(format!("dac_bits must be in 1..=32 or \"ideal\", got {b}"));
            }
        }
        if !(self.amplitude_ripple_db >= 0.0 && self.amplitude_ripple_db.is_finite()) {
            issues.push(format!(
                "amplitude_ripple_db must be non-negative, got {}",
                self.amplitude_ripple_db
            ));
        }
        if !(self.base_reflection_amplitude > 0.0 && self.base_reflection_amplitude <= 1.0) {
            issues.push(format!(
                "base_reflection_amplitude must lie in (0, 1], got {}",
                self.base_reflection_amplitude
            ));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Reflection amplitude at bias voltage `v`: the base amplitude with a
    /// sinusoidal ripple of the configured peak-to-peak size across the domain.
    pub fn reflection_amplitude(&self, v: f64, range: (f64, f64)) -> f64 {
        if self.amplitude_ripple_db == 0.0 {
            return self.base_reflection_amplitude;
        }
        let (lo, hi) = range;
        let ripple_db = 0.5 * self.amplitude_ripple_db * (TAU * (v - lo) / (hi - lo)).sin();
        (self.base_reflection_amplitude * 10f64.powf(ripple_db / 20.0)).min(1.0)
    }
}

/// Voltage coupling factor `κ = 10^(−isolation/20)`.
pub fn coupling_factor(isolation_db: f64) -> f64 {
    if isolation_db.is_infinite() && isolation_db > 0.0 {
        0.0
    } else {
        10f64.powf(-isolation_db / 20.0)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Couples the AC component of each control line into the other:
/// `v0' = v0 + κ (v1 − mean v1)` and symmetrically for `v1'`. The inputs are
/// one symbol's worth of samples.
pub fn apply_coupling(v0: &[f64], v1: &[f64], isolation_db: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    apply_coupling_factor(v0, v1, coupling_factor(isolation_db))
}

pub fn apply_coupling_factor(v0: &[f64], v1: &[f64], kappa: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if v0.len() != v1.len() {
        return Err(Error::LengthMismatch(v0.len(), v1.len()));
    }
    if kappa == 0.0 {
        return Ok((v0.to_vec(), v1.to_vec()));
    }
    let (m0, m1) = (mean(v0), mean(v1));
    let out0 = v0.iter().zip(v1).map(|(a, b)| a + kappa * (b - m1)).collect();
    let out1 = v1.iter().zip(v0).map(|(a, b)| a + kappa * (b - m0)).collect();
    Ok((out0, out1))
}

/// Per-polarization reflection waveforms of one symbol after the hardware.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortedSymbol {
    pub waveforms: [Vec<Complex64>; 2],
    pub clips: ClipCounter,
}

/// Runs one symbol of both polarizations through the control path:
/// intended phase → voltage → DAC → coupling → realized phase → reflection.
pub fn distort_reflection(
    stream0: &TmSymbolParams,
    stream1: &TmSymbolParams,
    lut: &PhaseVoltageLut,
    hw: &HardwareConfig,
    sample_count: usize,
) -> Result<DistortedSymbol> {
    if sample_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples per symbol, got {sample_count}"
        )));
    }
    let drive = |params: &TmSymbolParams, pol: Polarization| -> Result<Vec<f64>> {
        let range = lut.curve(pol).voltage_range();
        params
            .sample_phases(sample_count)
            .into_iter()
            .map(|phi| Ok(hw.dac_bits.quantize(lut.phase_to_voltage(phi, pol)?, range)))
            .collect()
    };
    let v0 = drive(stream0, Polarization::Pol0)?;
    let v1 = drive(stream1, Polarization::Pol1)?;
    let (v0, v1) = apply_coupling_factor(&v0, &v1, hw.coupling_factor())?;

    let mut clips = ClipCounter::default();
    let mut realize = |volts: &[f64], pol: Polarization| -> Vec<Complex64> {
        let range = lut.curve(pol).voltage_range();
        volts
            .iter()
            .map(|&v| {
                let phi = lut.voltage_to_phase(v, pol, &mut clips);
                let amp = hw.reflection_amplitude(v.clamp(range.0, range.1), range);
                Complex64::from_polar(amp, phi)
            })
            .collect()
    };
    let w0 = realize(&v0, Polarization::Pol0);
    let w1 = realize(&v1, Polarization::Pol1);
    Ok(DistortedSymbol {
        waveforms: [w0, w1],
        clips,
    })
}
