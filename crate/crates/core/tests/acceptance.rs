//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured figures before asserting, so `--nocapture` gives a report.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use risim_core::campaign::{run_ber_sweep, PENALTY_TARGET_BER};
use risim_core::channel::{build_channel_set, carrier_decomposition, complex_normal, effective_stream_channel};
use risim_core::config::{throughput_bps, CampaignConfig, Fidelity, StreamRelation};
use risim_core::hardware::{distort_reflection, HardwareConfig, PhaseVoltageLut};
use risim_core::linalg::{CMatrix, Matrix2};
use risim_core::model::{attenuation_from, received_full, received_reduced, ChannelSet, ReflectionVector};
use risim_core::modulator::{
    harmonic_closed_form, harmonic_exact, parseval_partial_sum, qam_to_tm, wrap_phase, QamTarget,
    TmSymbolParams,
};
use risim_core::qam::{constellation, map_bits_to_qam};
use risim_core::receiver::{ber_count, demap, extract_harmonic, ZfEqualizer, DEFAULT_MAX_CONDITION};
use risim_core::Complex64;

const TS: f64 = 4e-7;

fn report(id: u32, ok: bool, what: &str, detail: String) {
    println!("{} criterion {id}: {what} | {detail}", if ok { "PASS" } else { "FAIL" });
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Δφ uniform on (0, 2π], shift uniform on [0, Ts).
fn random_params(rng: &mut impl Rng) -> TmSymbolParams {
    TmSymbolParams::new(TAU - rng.random_range(0.0..TAU), rng.random_range(0.0..TS), TS).unwrap()
}

#[test]
fn criterion_1_closed_form_matches_exact_harmonic() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_amp, mut worst_phase) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let a = harmonic_closed_form(&p);
        let b = harmonic_exact(&p, -1);
        worst_amp = worst_amp.max((a.amplitude() - b.amplitude()).abs());
        worst_phase = worst_phase.max(wrap_phase(a.phase() - b.phase()).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst_amp <= 1e-9 && worst_phase <= 1e-9 && within(elapsed, 5.0);
    report(
        1,
        ok,
        "closed-form vs exact -1st harmonic, 1000 draws, tol 1e-9",
        format!("max |Δamp| = {worst_amp:.3e}, max |Δphase| = {worst_phase:.3e} rad, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_2_parseval_partial_sums() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut sums = Vec::with_capacity(100);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        sums.push((p.delta_phi(), parseval_partial_sum(&p, 200)));
    }
    let elapsed = start.elapsed();
    let outside: Vec<&(f64, f64)> = sums.iter().filter(|(_, s)| !(*s >= 0.999 && *s <= 1.0 + 1e-6)).collect();
    let min = sums.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let max = sums.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let ok = outside.is_empty() && within(elapsed, 30.0);
    report(
        2,
        ok,
        "sum of |c_k|^2 over |k| <= 200 in [0.999, 1 + 1e-6], 100 draws",
        format!(
            "min = {min:.12}, max = {max:.12}, {} of 100 outside (e.g. Δφ = {:?}), {elapsed:.2?}",
            outside.len(),
            outside.first().map(|o| o.0)
        ),
    );
    assert!(ok);
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, 1.0))
}

#[test]
fn criterion_3_full_and_reduced_models_agree() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=64);
        let k = rng.random_range(1..=4);
        let set = ChannelSet::new(
            random_matrix(&mut rng, 2 * n, 2),
            random_matrix(&mut rng, 2 * k, 2 * n),
            carrier_decomposition(rng.random_range(0.0..=90.0)).unwrap(),
            rng.random_range(0.1..10.0),
        )
        .unwrap();
        let amp_phase: Vec<(f64, f64)> =
            (0..2 * n).map(|_| (rng.random_range(0.0..=1.0), rng.random_range(0.0..TAU))).collect();
        let x = ReflectionVector::from_polar(&amp_phase).unwrap();
        let w: Vec<Complex64> = (0..2 * k).map(|_| complex_normal(&mut rng, 0.1)).collect();
        let full = received_full(&set, &x, &w).unwrap();
        let reduced = received_reduced(&set, &attenuation_from(&set).unwrap(), &x, &w).unwrap();
        for (a, b) in full.as_slice().iter().zip(reduced.as_slice()) {
            worst = worst.max((a - b).norm());
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-12 && within(elapsed, 5.0);
    report(
        3,
        ok,
        "full cascade vs reduced model, 1000 instances, N <= 64, K <= 4, tol 1e-12",
        format!("max |Δy| = {worst:.3e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_noiseless_loopback() {
    let start = Instant::now();
    let config = CampaignConfig::default();
    let set = build_channel_set(&config.geometry, &config.channel).unwrap();
    let e = attenuation_from(&set).unwrap();
    let g = Matrix2::try_from(&effective_stream_channel(&set.h2, &e, set.carrier_power_watts).unwrap()).unwrap();
    let zf = ZfEqualizer::new(&g, DEFAULT_MAX_CONDITION).unwrap();
    let cells = set.cells();
    let zeros = [Complex64::new(0.0, 0.0); 2];

    let symbols = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let tx: [Vec<bool>; 2] = [0, 1].map(|_| (0..4 * symbols).map(|_| rng.random::<bool>()).collect());
    let q = [map_bits_to_qam(&tx[0]).unwrap(), map_bits_to_qam(&tx[1]).unwrap()];
    let mut rx: [Vec<bool>; 2] = [Vec::new(), Vec::new()];
    for (q0, q1) in q[0].iter().zip(&q[1]) {
        let s = [
            harmonic_closed_form(&qam_to_tm(*q0, TS).unwrap()).value,
            harmonic_closed_form(&qam_to_tm(*q1, TS).unwrap()).value,
        ];
        let x = ReflectionVector::replicated(cells, s[0], s[1]).unwrap();
        let y = received_reduced(&set, &e, &x, &zeros).unwrap();
        let est = zf.equalize([y.as_slice()[0], y.as_slice()[1]]);
        for p in 0..2 {
            rx[p].extend(demap(est[p]).1);
        }
    }
    let r0 = ber_count(&tx[0], &rx[0]).unwrap();
    let r1 = ber_count(&tx[1], &rx[1]).unwrap();
    let elapsed = start.elapsed();
    let ok = r0.bit_errors == 0 && r1.bit_errors == 0 && within(elapsed, 10.0);
    report(
        4,
        ok,
        "noiseless fidelity-A loopback, perfect CSI, 1e5 symbols per stream",
        format!(
            "bit errors stream0 = {}, stream1 = {} of {} bits each, {elapsed:.2?}",
            r0.bit_errors, r1.bit_errors, r0.bits_sent
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_awgn_curve_matches_theory() {
    let mut config = CampaignConfig::default();
    config.seed = 105;
    config.sweep.ebn0_db = vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
    config.sweep.bits_per_point = 2_000_000;
    config.sweep.fidelity = Fidelity::A;
    config.sweep.coupling = false;
    let r = run_ber_sweep(&config, &PhaseVoltageLut::default_synthetic(), None).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for p in &r.points {
        let inside = p.record.consistent_with(p.theoretical_ber, 3.0);
        ok &= inside;
        detail.push(format!(
            "{} dB: {:.3e} vs {:.3e}{}",
            p.ebn0_db(),
            p.record.ber,
            p.theoretical_ber,
            if inside { "" } else { " (outside)" }
        ));
    }
    report(
        5,
        ok,
        "coupling off, simulated vs exact 16-QAM BER within 3 Wilson SE, 2e6 bits/point",
        detail.join("; "),
    );
    assert!(ok);
}

#[test]
fn criterion_6_coupling_penalty_ordering() {
    let lut = PhaseVoltageLut::default_synthetic();
    let penalty = |relation: StreamRelation| {
        let mut config = CampaignConfig::default();
        config.seed = 106;
        config.sweep.fidelity = Fidelity::B;
        config.sweep.coupling = true;
        config.sweep.stream_relation = relation;
        config.sweep.ebn0_db = (6..=24).map(f64::from).collect();
        config.sweep.bits_per_point = 2_000_000;
        assert_eq!(config.hardware.isolation_db, 16.0);
        run_ber_sweep(&config, &lut, None).unwrap().snr_penalty_db(PENALTY_TARGET_BER)
    };
    let independent = penalty(StreamRelation::Independent);
    let identical = penalty(StreamRelation::Identical);
    let ok = independent > identical && identical > 0.0;
    report(
        6,
        ok,
        "16 dB isolation, SNR penalty at BER 1e-4: independent > identical > 0",
        format!("independent = {independent:.2} dB, identical = {identical:.2} dB"),
    );
    assert!(ok);
}

#[test]
fn criterion_7_waveform_level_matches_symbol_level() {
    let lut = PhaseVoltageLut::default_synthetic();
    let hw = HardwareConfig::ideal();
    let params: Vec<TmSymbolParams> =
        constellation().iter().map(|&p| qam_to_tm(QamTarget::new(p).unwrap(), TS).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut worst = 0.0f64;
    for _ in 0..5_000 {
        let (i0, i1) = (rng.random_range(0..16), rng.random_range(0..16));
        let d = distort_reflection(&params[i0], &params[i1], &lut, &hw, 4096).unwrap();
        for (w, i) in d.waveforms.iter().zip([i0, i1]) {
            let a = harmonic_closed_form(&params[i]).value;
            worst = worst.max((extract_harmonic(w) - a).norm());
        }
    }
    let ok = worst <= 3e-4;
    report(
        7,
        ok,
        "fidelity B without impairments vs fidelity A, M = 4096, 1e4 symbols",
        format!("max |Δs| = {worst:.3e} (bound 3e-4)"),
    );
    assert!(ok);
}

#[test]
fn criterion_8_determinism_across_thread_counts() {
    let lut = PhaseVoltageLut::default_synthetic();
    let mut all = true;
    let mut detail = Vec::new();
    for (fidelity, coupling) in [(Fidelity::A, false), (Fidelity::B, true)] {
        let mut config = CampaignConfig::default();
        config.seed = 108;
        config.sweep.fidelity = fidelity;
        config.sweep.coupling = coupling;
        config.sweep.bits_per_point = 300_000;
        let one = run_ber_sweep(&config, &lut, Some(1)).unwrap().to_csv();
        let eight = run_ber_sweep(&config, &lut, Some(8)).unwrap().to_csv();
        let again = run_ber_sweep(&config, &lut, Some(8)).unwrap().to_csv();
        let same = one == eight && eight == again;
        all &= same;
        detail.push(format!("fidelity {fidelity}: {} bytes, identical = {same}", one.len()));
    }
    report(8, all, "same seed and config at 1 and 8 threads give byte-identical CSV", detail.join("; "));
    assert!(all);
}

#[test]
fn criterion_9_throughput_bookkeeping() {
    let config = CampaignConfig::default();
    let rate = throughput_bps(config.symbol_rate_sps);
    let mut quick = config.clone();
    quick.sweep.ebn0_db = vec![10.0];
    quick.sweep.bits_per_point = 10_000;
    let r = run_ber_sweep(&quick, &PhaseVoltageLut::default_synthetic(), Some(1)).unwrap();
    let header_ok = r.to_csv().lines().next().unwrap().contains("throughput_bps=20000000");
    let ok = rate == 20e6 && r.throughput_bps == 20e6 && header_ok;
    report(
        9,
        ok,
        "default throughput = 2 streams x 4 bits x 2.5 MSps = 20 Mbps",
        format!("computed {rate} bps, reported {} bps", r.throughput_bps),
    );
    assert!(ok);
}
