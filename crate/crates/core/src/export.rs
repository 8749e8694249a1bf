//! Sampled waveform and its harmonic content as CSV.

use crate::config::WaveformConfig;
use crate::error::Result;
use crate::modulator::{harmonic_closed_form, harmonic_exact, parseval_partial_sum, waveform, TmSymbolParams};

pub const EXPORT_COLUMNS: [&str; 7] = ["record", "index", "t_seconds", "re", "im", "amplitude", "phase_rad"];

/// One symbol of the phase ramp sampled `cfg.samples` times, the exact
/// coefficients for `|k| ≤ cfg.max_harmonic`, the closed-form −1st
/// harmonic, and the Parseval partial sum over the exported orders.
///
/// Records are tagged `sample`, `harmonic`, `closed_form` and
/// `parseval_partial_sum`.
pub fn export_waveform(cfg: &WaveformConfig, symbol_period_s: f64, config_hash: &str) -> Result<String> {
    let params = TmSymbolParams::new(cfg.delta_phi_rad, cfg.shift_fraction * symbol_period_s, symbol_period_s)?;
    let mut out = format!(
        "# delta_phi_rad={} shift_fraction={} symbol_period_s={} config_hash={}\n",
        cfg.delta_phi_rad, cfg.shift_fraction, symbol_period_s, config_hash
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(EXPORT_COLUMNS).expect("in-memory write");
    let mut row = |record: &str, index: i64, t: Option<f64>, re: f64, im: f64| {
        let z = num_complex::Complex64::new(re, im);
        w.write_record([
            record.to_string(),
            index.to_string(),
            t.map(|t| t.to_string()).unwrap_or_default(),
            re.to_string(),
            im.to_string(),
            z.norm().to_string(),
            z.arg().to_string(),
        ])
        .expect("in-memory write");
    };
    let m = cfg.samples;
    for (i, v) in waveform(&params, m)?.iter().enumerate() {
        row("sample", i as i64, Some(symbol_period_s * i as f64 / m as f64), v.re, v.im);
    }
    for k in -cfg.max_harmonic..=cfg.max_harmonic {
        let c = harmonic_exact(&params, k).value;
        row("harmonic", i64::from(k), None, c.re, c.im);
    }
    let c = harmonic_closed_form(&params).value;
    row("closed_form", -1, None, c.re, c.im);
    row("parseval_partial_sum", i64::from(cfg.max_harmonic), None, parseval_partial_sum(&params, cfg.max_harmonic), 0.0);
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8"));
    Ok(out)
}
