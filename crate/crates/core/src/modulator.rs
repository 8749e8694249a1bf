//! Nonlinear time modulation onto the −1st carrier harmonic.
//!
//! Each cell drives its reflection phase as a periodic linear ramp that falls
//! by `Δφ` over one symbol period `Ts`, cyclically delayed by `t_shift`:
//!
//! ```text
//! x(t) = exp(j Δφ/Ts (Ts − t_shift − t))     t ∈ [0, Ts − t_shift]
//! x(t) = exp(j Δφ/Ts (2Ts − t_shift − t))    t ∈ (Ts − t_shift, Ts]
//! ```
//!
//! The waveform is unimodular, yet its −1st Fourier coefficient (the tone at
//! `f_c − 1/Ts`) has a controllable amplitude and phase:
//!
//! ```text
//! a   = |sinc(Δφ/2 − π)|                      (unnormalized sinc)
//! φ   = −2π t_shift/Ts + Δφ/2 + ε(2π − Δφ)·π + mod(⌊Δφ/2π − 1⌋, 2)·π − π
//! ```
//!
//! with `ε(0) = 0` and a non-negative remainder for `mod`. `ε(0) = 0` is the
//! only choice consistent with the exact Fourier integral computed by
//! [`harmonic_exact`] at `Δφ = 2π`; the remainder convention moves the
//! unwrapped phase by 2π at most. Both boundary cases are pinned in tests.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ReflectionVector;

/// Default samples per symbol for waveform-level simulation.
pub const DEFAULT_SAMPLES_PER_SYMBOL: usize = 64;

/// Unnormalized sinc, `sin(u)/u` with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Reduces a phase to `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Parameters of one modulated symbol on one cell/polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmSymbolParams {
    delta_phi: f64,
    t_shift: f64,
    symbol_period_s: f64,
}

impl TmSymbolParams {
    /// `delta_phi ∈ (0, 2π]`, `t_shift ∈ [0, Ts)`, `Ts > 0`.
    pub fn new(delta_phi: f64, t_shift: f64, symbol_period_s: f64) -> Result<Self> {
        if !(symbol_period_s > 0.0 && symbol_period_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "symbol period must be positive, got {symbol_period_s}"
            )));
        }
        if !(delta_phi > 0.0 && delta_phi <= TAU) {
            return Err(Error::InvalidParameter(format!(
                "phase excursion must lie in (0, 2π], got {delta_phi}"
            )));
        }
        if !(t_shift >= 0.0 && t_shift < symbol_period_s) {
            return Err(Error::InvalidParameter(format!(
                "cyclic time shift must lie in [0, Ts), got {t_shift}"
            )));
        }
        Ok(Self {
            delta_phi,
            t_shift,
            symbol_period_s,
        })
    }

    pub fn delta_phi(&self) -> f64 {
        self.delta_phi
    }

    pub fn t_shift(&self) -> f64 {
        self.t_shift
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period_s
    }

    /// Time shift as a fraction of the symbol period, in `[0, 1)`.
    pub fn shift_fraction(&self) -> f64 {
        self.t_shift / self.symbol_period_s
    }

    /// Ramp phase at normalized time `u = t/Ts ∈ [0, 1]`. Lies in `[0, Δφ]`.
    pub fn phase_at_fraction(&self, u: f64) -> f64 {
        let s = self.shift_fraction();
        if u <= 1.0 - s {
            self.delta_phi * (1.0 - s - u)
        } else {
            self.delta_phi * (2.0 - s - u)
        }
    }

    /// Intended ramp phase at sample `m` of an `M`-sample symbol, `t_m = m·Ts/M`.
    pub fn sample_phases(&self, sample_count: usize) -> Vec<f64> {
        (0..sample_count)
            .map(|m| self.phase_at_fraction(m as f64 / sample_count as f64))
            .collect()
    }
}

/// A Fourier coefficient of the per-symbol reflection waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicCoefficient {
    pub order: i32,
    pub value: Complex64,
}

impl HarmonicCoefficient {
    pub fn amplitude(&self) -> f64 {
        self.value.norm()
    }

    /// Phase in `(−π, π]`.
    pub fn phase(&self) -> f64 {
        wrap_phase(self.value.arg())
    }
}

/// Constellation point to be carried on the −1st harmonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamTarget(Complex64);

impl QamTarget {
    pub fn new(point: Complex64) -> Result<Self> {
        let a = point.norm();
        if !a.is_finite() || a > 1.0 + 1e-12 {
            return Err(Error::UnreachableAmplitude(a));
        }
        Ok(Self(point))
    }

    pub fn point(&self) -> Complex64 {
        self.0
    }
}

/// Samples the modulated reflection waveform at `t_m = m·Ts/M`.
pub fn waveform(params: &TmSymbolParams, sample_count: usize) -> Result<Vec<Complex64>> {
    if sample_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples per symbol, got {sample_count}"
        )));
    }
    Ok(params
        .sample_phases(sample_count)
        .into_iter()
        .map(|phi| Complex64::from_polar(1.0, phi))
        .collect())
}

/// Amplitude of the −1st harmonic as a function of the phase excursion.
pub fn harmonic_amplitude(delta_phi: f64) -> f64 {
    sinc(delta_phi / 2.0 - PI).abs()
}

fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Unwrapped −1st-harmonic phase from the closed form.
fn closed_form_phase(delta_phi: f64, shift_fraction: f64) -> f64 {
    let floor_term = (delta_phi / TAU - 1.0).floor();
    -TAU * shift_fraction
        + delta_phi / 2.0
        + step(TAU - delta_phi) * PI
        + floor_term.rem_euclid(2.0) * PI
        - PI
}

/// Closed-form −1st-harmonic coefficient of the modulated waveform.
pub fn harmonic_closed_form(params: &TmSymbolParams) -> HarmonicCoefficient {
    let a = harmonic_amplitude(params.delta_phi);
    let phi = wrap_phase(closed_form_phase(params.delta_phi, params.shift_fraction()));
    HarmonicCoefficient {
        order: -1,
        value: Complex64::from_polar(a, phi),
    }
}

/// `∫_{u0}^{u1} exp(j(a + b u)) du`, written around the segment midpoint so
/// that `b → 0` needs no special case.
fn linear_phase_integral(a: f64, b: f64, u0: f64, u1: f64) -> Complex64 {
    let width = u1 - u0;
    if width <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mid = 0.5 * (u0 + u1);
    Complex64::from_polar(width * sinc(0.5 * b * width), a + b * mid)
}

/// Exact Fourier coefficient of order `k`,
/// `c_k = (1/Ts) ∫₀^Ts x(t) e^{−j2πkt/Ts} dt`, by integrating each of the
/// two linear-phase segments analytically.
pub fn harmonic_exact(params: &TmSymbolParams, order: i32) -> HarmonicCoefficient {
    let d = params.delta_phi;
    let s = params.shift_fraction();
    let slope = -d - TAU * f64::from(order);
    let first = linear_phase_integral(d * (1.0 - s), slope, 0.0, 1.0 - s);
    let second = linear_phase_integral(d * (2.0 - s), slope, 1.0 - s, 1.0);
    HarmonicCoefficient {
        order,
        value: first + second,
    }
}

/// `Σ_{|k|≤K} |c_k|²` over exact coefficients.
pub fn parseval_partial_sum(params: &TmSymbolParams, max_order: i32) -> f64 {
    (-max_order..=max_order).map(|k| harmonic_exact(params, k).value.norm_sqr()).sum()
}

/// Upper bound on the energy outside `|k| ≤ K`.
///
/// With `|c_k|² = sin²(Δφ/2) / (π² (k + a)²)`, `a = Δφ/2π`, each tail is
/// bounded by the midpoint rule for the convex `1/x²`:
/// `Σ_{k>K} 1/(k ± a)² ≤ 1/(K + ½ ± a)`.
pub fn parseval_tail_bound(delta_phi: f64, max_order: i32) -> f64 {
    let k = f64::from(max_order);
    let a = delta_phi / TAU;
    let s2 = (delta_phi / 2.0).sin().powi(2);
    s2 / (PI * PI) * (1.0 / (k + 0.5 + a) + 1.0 / (k + 0.5 - a))
}

/// Inverts the closed form: finds `(Δφ, t_shift)` whose −1st harmonic equals
/// `target`.
///
/// `Δφ` comes from bisection on the amplitude, which increases strictly on
/// `(0, 2π]`; the time shift then follows directly from the phase law.
pub fn qam_to_tm(target: QamTarget, symbol_period_s: f64) -> Result<TmSymbolParams> {
    let q = target.point();
    let amp = q.norm();
    if !(amp > 0.0 && amp <= 1.0 + 1e-12) {
        return Err(Error::UnreachableAmplitude(amp));
    }

    let delta_phi = if amp >= 1.0 {
        TAU
    } else {
        let (mut lo, mut hi) = (0.0_f64, TAU);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if harmonic_amplitude(mid) < amp {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let phase0 = closed_form_phase(delta_phi, 0.0);
    let mut frac = ((phase0 - q.arg()) / TAU).rem_euclid(1.0);
    if frac >= 1.0 - 1e-12 {
        frac = 0.0;
    }
    let t_shift = (frac * symbol_period_s).min(symbol_period_s * (1.0 - f64::EPSILON));
    TmSymbolParams::new(delta_phi, t_shift, symbol_period_s)
}

/// Equivalent baseband vector: the closed-form −1st harmonic of every
/// cell/polarization, in wire order.
pub fn equivalent_baseband(params: &[TmSymbolParams]) -> Result<ReflectionVector> {
    ReflectionVector::new(
        params
            .iter()
            .map(|p| harmonic_closed_form(p).value)
            .collect(),
    )
}
