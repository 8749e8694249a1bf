//! Self-check suites run by `oracle-check`.
//!
//! * `harmonic`: closed-form −1st harmonic against the exact piecewise
//!   Fourier integral.
//! * `model`: full cascade against the reduced attenuation model.
//! * `parseval`: truncated coefficient energy against 1 minus the analytic
//!   tail bound, and never above 1.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{carrier_decomposition, complex_normal};
use crate::config::{Fault, OracleConfig};
use crate::error::Result;
use crate::linalg::CMatrix;
use crate::model::{attenuation_from, received_full, received_reduced, ChannelSet, ReflectionVector};
use crate::modulator::{
    harmonic_closed_form, harmonic_exact, parseval_partial_sum, parseval_tail_bound, wrap_phase,
    HarmonicCoefficient, TmSymbolParams,
};

/// Largest excess of the partial sum over 1 treated as rounding.
pub const PARSEVAL_UPPER_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest error relative to the suite's tolerance (≤ 1 passes).
    pub worst_ratio: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<9} cases={} failures={} worst/tol={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.worst_ratio
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub suites: Vec<SuiteReport>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: 0, worst: 0.0 }
    }

    fn record(&mut self, ratio: f64) {
        self.cases += 1;
        if !(ratio <= 1.0) {
            self.failures += 1;
        }
        self.worst = self.worst.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            worst_ratio: self.worst,
        }
    }
}

fn random_params(rng: &mut impl Rng) -> TmSymbolParams {
    // (0, 2π]: reflect the half-open draw.
    let d = TAU - rng.random_range(0.0..TAU);
    TmSymbolParams::new(d, rng.random_range(0.0..1.0), 1.0).expect("drawn in range")
}

fn closed_form(params: &TmSymbolParams, fault: Option<Fault>) -> HarmonicCoefficient {
    let c = harmonic_closed_form(params);
    match fault {
        None => c,
        Some(Fault::HarmonicPhaseSign) => HarmonicCoefficient {
            value: Complex64::from_polar(c.amplitude(), -c.phase()),
            ..c
        },
    }
}

fn harmonic_suite(cfg: &OracleConfig, rng: &mut impl Rng) -> SuiteReport {
    let mut t = Tally::new("harmonic");
    for _ in 0..cfg.cases_per_suite {
        let p = random_params(rng);
        let a = closed_form(&p, cfg.inject_fault);
        let b = harmonic_exact(&p, -1);
        let amp = (a.amplitude() - b.amplitude()).abs();
        let phase = wrap_phase(a.phase() - b.phase()).abs();
        t.record(amp.max(phase) / cfg.harmonic_tolerance);
    }
    t.finish()
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, 1.0))
}

fn model_suite(cfg: &OracleConfig, rng: &mut impl Rng) -> Result<SuiteReport> {
    let mut t = Tally::new("model");
    for _ in 0..cfg.cases_per_suite {
        let n = rng.random_range(1..=cfg.max_cells);
        let k = rng.random_range(1..=cfg.max_rx_antennas);
        let set = ChannelSet::new(
            random_matrix(rng, 2 * n, 2),
            random_matrix(rng, 2 * k, 2 * n),
            carrier_decomposition(rng.random_range(0.0..=90.0))?,
            rng.random_range(0.1..10.0),
        )?;
        let x = ReflectionVector::from_polar(
            &(0..2 * n)
                .map(|_| (rng.random_range(0.0..=1.0), rng.random_range(0.0..TAU)))
                .collect::<Vec<_>>(),
        )?;
        let w: Vec<Complex64> = (0..2 * k).map(|_| complex_normal(rng, 0.1)).collect();
        let full = received_full(&set, &x, &w)?;
        let reduced = received_reduced(&set, &attenuation_from(&set)?, &x, &w)?;
        let diff = full
            .as_slice()
            .iter()
            .zip(reduced.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        t.record(diff / cfg.model_tolerance);
    }
    Ok(t.finish())
}

fn parseval_suite(cfg: &OracleConfig, rng: &mut impl Rng) -> SuiteReport {
    let mut t = Tally::new("parseval");
    let kmax = cfg.parseval_max_order;
    for _ in 0..cfg.cases_per_suite {
        let p = random_params(rng);
        let s = parseval_partial_sum(&p, kmax);
        let missing = (1.0 - s) / (parseval_tail_bound(p.delta_phi(), kmax) + 1e-12);
        let excess = (s - 1.0) / PARSEVAL_UPPER_SLACK;
        t.record(missing.max(excess));
    }
    t.finish()
}

/// Runs all suites with draws from `seed`.
pub fn run_oracle_check(cfg: &OracleConfig, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let harmonic = harmonic_suite(cfg, &mut rng);
    let model = model_suite(cfg, &mut rng)?;
    let parseval = parseval_suite(cfg, &mut rng);
    Ok(OracleReport {
        suites: vec![harmonic, model, parseval],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OracleConfig {
        OracleConfig {
            cases_per_suite: 200,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn correct_build_passes() {
        let r = run_oracle_check(&small(), 3).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.suites.iter().all(|s| s.cases == 200));
    }

    #[test]
    fn phase_sign_fault_is_caught() {
        let cfg = OracleConfig {
            inject_fault: Some(Fault::HarmonicPhaseSign),
            ..small()
        };
        let r = run_oracle_check(&cfg, 3).unwrap();
        assert!(!r.passed());
        let h = &r.suites[0];
        assert_eq!(h.name, "harmonic");
        assert!(h.failures > 190, "{h}");
        assert!(r.suites[1].passed() && r.suites[2].passed());
    }

    #[test]
    fn default_suite_size() {
        assert_eq!(OracleConfig::default().cases_per_suite, 1000);
    }

    #[test]
    fn report_lines() {
        let r = run_oracle_check(&OracleConfig { cases_per_suite: 5, ..small() }, 0).unwrap();
        let text = r.to_string();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.starts_with("PASS")));
    }
}
