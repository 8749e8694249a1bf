//! Stream recovery: harmonic extraction, pilot-based channel estimation,
//! zero-forcing equalization, hard-decision demapping and BER bookkeeping.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix2};
use crate::qam::{self, constellation, BITS_PER_SYMBOL};

/// Default bound on the condition number of the channel handed to ZF.
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;

/// Default pilot length per stream.
pub const DEFAULT_PILOT_LEN: usize = 16;

/// Discrete correlator for the −1st harmonic of one symbol's samples.
#[derive(Debug, Clone)]
pub struct HarmonicExtractor {
    twiddles: Vec<Complex64>,
}

impl HarmonicExtractor {
    pub fn new(sample_count: usize) -> Self {
        let m = sample_count as f64;
        Self {
            twiddles: (0..sample_count)
                .map(|i| Complex64::from_polar(1.0 / m, TAU * i as f64 / m))
                .collect(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.twiddles.len()
    }

    /// `(1/M) Σ rx[m] e^{+j2πm/M}`.
    pub fn extract(&self, rx: &[Complex64]) -> Complex64 {
        debug_assert_eq!(rx.len(), self.twiddles.len());
        rx.iter().zip(&self.twiddles).map(|(a, b)| a * b).sum()
    }
}

/// One-shot version of [`HarmonicExtractor::extract`].
pub fn extract_harmonic(rx: &[Complex64]) -> Complex64 {
    HarmonicExtractor::new(rx.len()).extract(rx)
}

/// Known pilot symbols, 2 streams × L.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    symbols: CMatrix,
}

impl PilotBlock {
    pub fn new(symbols: CMatrix) -> Result<Self> {
        if symbols.rows() != 2 || symbols.cols() < 2 {
            return Err(Error::InvalidParameter(format!(
                "pilot block must be 2 x L with L >= 2, got {} x {}",
                symbols.rows(),
                symbols.cols()
            )));
        }
        let pilots = Self { symbols };
        pilots.gram_inverse()?;
        Ok(pilots)
    }

    /// Outer-corner pilots with orthogonal ±1 cover codes: stream 0 uses the
    /// all-ones code, stream 1 alternates sign. `len` must be even.
    pub fn orthogonal(len: usize) -> Result<Self> {
        if len < 2 || !len.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "orthogonal pilots need an even length >= 2, got {len}"
            )));
        }
        let p = constellation()[0b1010];
        let symbols = CMatrix::from_fn(2, len, |r, l| {
            if r == 1 && l % 2 == 1 {
                -p
            } else {
                p
            }
        });
        Self::new(symbols)
    }

    pub fn len(&self) -> usize {
        self.symbols.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbols(&self) -> &CMatrix {
        &self.symbols
    }

    /// Pilot vector sent at slot `l`.
    pub fn column(&self, l: usize) -> [Complex64; 2] {
        [self.symbols[(0, l)], self.symbols[(1, l)]]
    }

    /// `(S Sᴴ)⁻¹`, or an error when the pilots do not span both streams.
    fn gram_inverse(&self) -> Result<Matrix2> {
        let s = &self.symbols;
        let mut gram = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in gram.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..s.cols()).map(|l| s[(r, l)] * s[(c, l)].conj()).sum();
            }
        }
        let gram = Matrix2(gram);
        if gram.condition_number() > 1e12 {
            return Err(Error::RankDeficientPilots);
        }
        gram.inverse().ok_or(Error::RankDeficientPilots)
    }
}

/// Least-squares channel estimate `Ĝ = Y Sᴴ (S Sᴴ)⁻¹` from 2 × L observations.
pub fn estimate_channel(pilots: &PilotBlock, observations: &CMatrix) -> Result<Matrix2> {
    if observations.rows() != 2 || observations.cols() != pilots.len() {
        return Err(Error::Dimension {
            context: "pilot observations",
            expected: 2 * pilots.len(),
            actual: observations.rows() * observations.cols(),
        });
    }
    let s = pilots.symbols();
    let mut ysh = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, row) in ysh.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..s.cols()).map(|l| observations[(r, l)] * s[(c, l)].conj()).sum();
        }
    }
    Ok(Matrix2(ysh).mul(&pilots.gram_inverse()?))
}

/// Zero-forcing detector with the channel inverse precomputed.
#[derive(Debug, Clone, Copy)]
pub struct ZfEqualizer {
    inverse: Matrix2,
    condition: f64,
}

impl ZfEqualizer {
    pub fn new(g_hat: &Matrix2, max_condition: f64) -> Result<Self> {
        let condition = g_hat.condition_number();
        if !(condition <= max_condition) {
            return Err(Error::SingularChannel { condition });
        }
        let inverse = g_hat
            .inverse()
            .ok_or(Error::SingularChannel { condition })?;
        Ok(Self { inverse, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn equalize(&self, y: [Complex64; 2]) -> [Complex64; 2] {
        self.inverse.mul_vec(y)
    }
}

/// `ŝ = Ĝ⁻¹ y`, refusing channels with condition number above `max_condition`.
pub fn zf_equalize(g_hat: &Matrix2, y: [Complex64; 2], max_condition: f64) -> Result<[Complex64; 2]> {
    Ok(ZfEqualizer::new(g_hat, max_condition)?.equalize(y))
}

/// Nearest 16-QAM point. Ties go to the lowest symbol index.
pub fn demap(s: Complex64) -> (usize, [bool; BITS_PER_SYMBOL]) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in constellation().iter().enumerate() {
        let d = (s - p).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    (best, qam::index_to_bits(best))
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Exact bit error probability of Gray-coded 16-QAM on AWGN.
///
/// Per axis, the sign bit errs with `(Q(d) + Q(3d))/2` and the inner/outer
/// bit with `(2Q(d) + Q(3d) − Q(5d))/2`, where `d = √(4/5 · Eb/N0)` is the
/// half-spacing over the noise standard deviation.
pub fn theoretical_ber_16qam(ebn0_db: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    let d = (0.8 * ebn0).sqrt();
    0.25 * (3.0 * q_function(d) + 2.0 * q_function(3.0 * d) - q_function(5.0 * d))
}

/// Eb/N0 in dB at which [`theoretical_ber_16qam`] equals `ber` (`0 < ber < 1/2`).
pub fn theoretical_ebn0_for_ber(ber: f64) -> f64 {
    let (mut lo, mut hi) = (-20.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theoretical_ber_16qam(mid) > ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Wilson score interval for `errors` out of `trials` at `z` standard errors.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// z for a two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Monte Carlo BER at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub ebn0_db: Option<f64>,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Half-width of the 95% Wilson interval.
    pub wilson_interval_halfwidth: f64,
}

impl BerRecord {
    pub fn from_counts(ebn0_db: Option<f64>, bits_sent: u64, bit_errors: u64) -> Result<Self> {
        if bits_sent == 0 {
            return Err(Error::InvalidParameter("BER record needs at least one bit".into()));
        }
        let (lo, hi) = wilson_interval(bit_errors, bits_sent, Z_95);
        Ok(Self {
            ebn0_db,
            bits_sent,
            bit_errors,
            ber: bit_errors as f64 / bits_sent as f64,
            wilson_interval_halfwidth: 0.5 * (hi - lo),
        })
    }

    /// Whether `p` lies within `z` Wilson standard errors of the estimate.
    pub fn consistent_with(&self, p: f64, z: f64) -> bool {
        let (lo, hi) = wilson_interval(self.bit_errors, self.bits_sent, z);
        p >= lo && p <= hi
    }
}

/// Counts bit errors between two equal-length streams.
pub fn ber_count(tx_bits: &[bool], rx_bits: &[bool]) -> Result<BerRecord> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::LengthMismatch(tx_bits.len(), rx_bits.len()));
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    BerRecord::from_counts(None, tx_bits.len() as u64, errors as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulator::{harmonic_exact, waveform, TmSymbolParams};
    use crate::qam::{index_to_bits, map_bits_to_qam};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cn(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
        let s = (var / 2.0).sqrt();
        c(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
    }

    fn random_matrix2(rng: &mut ChaCha8Rng) -> Matrix2 {
        Matrix2([[cn(rng, 1.0), cn(rng, 1.0)], [cn(rng, 1.0), cn(rng, 1.0)]])
    }

    #[test]
    fn matched_tone_and_dc() {
        let m = 64;
        let tone: Vec<_> = (0..m).map(|i| Complex64::from_polar(1.0, -TAU * i as f64 / m as f64)).collect();
        assert!((extract_harmonic(&tone) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(extract_harmonic(&vec![c(1.0, 0.0); m]).norm() < 1e-14);
    }

    #[test]
    fn correlator_converges_like_one_over_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ts = 1.0;
        let sizes = [64usize, 256, 1024, 4096];
        let mut mean = [0.0; 4];
        for _ in 0..200 {
            let p = TmSymbolParams::new(rng.random_range(0.01..=TAU), rng.random_range(0.0..ts), ts).unwrap();
            let exact = harmonic_exact(&p, -1).value;
            for (i, &m) in sizes.iter().enumerate() {
                let err = (extract_harmonic(&waveform(&p, m).unwrap()) - exact).norm();
                assert!(err <= 1.0 / m as f64, "M = {m}: error {err}");
                mean[i] += err / 200.0;
            }
        }
        for w in mean.windows(2) {
            assert!(w[1] / w[0] < 0.4, "mean errors {mean:?}");
        }
        // Stated bounds at the ends of the range.
        let p = TmSymbolParams::new(PI, 0.3, ts).unwrap();
        let exact = harmonic_exact(&p, -1).value;
        assert!((extract_harmonic(&waveform(&p, 64).unwrap()) - exact).norm() < 2e-2);
        assert!((extract_harmonic(&waveform(&p, 4096).unwrap()) - exact).norm() < 3e-4);
    }

    #[test]
    fn noiseless_estimate_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pilots = PilotBlock::orthogonal(DEFAULT_PILOT_LEN).unwrap();
        for _ in 0..20 {
            let g = random_matrix2(&mut rng);
            let y = CMatrix::from_fn(2, pilots.len(), |r, l| g.mul_vec(pilots.column(l))[r]);
            assert!(estimate_channel(&pilots, &y).unwrap().max_abs_diff(&g) < 1e-10);
        }
        let ident = estimate_channel(&pilots, pilots.symbols()).unwrap();
        assert!(ident.max_abs_diff(&Matrix2::identity()) < 1e-12);
    }

    #[test]
    fn rank_deficient_pilots_rejected() {
        let p = c(0.5, 0.5);
        let same = CMatrix::from_fn(2, 8, |_, _| p);
        assert!(matches!(PilotBlock::new(same), Err(Error::RankDeficientPilots)));
        assert!(PilotBlock::orthogonal(3).is_err());
    }

    #[test]
    fn estimate_error_shrinks_with_pilot_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let g = random_matrix2(&mut rng);
        let noise_var = 0.1;
        let mut mse = Vec::new();
        for len in [4usize, 16, 64] {
            let pilots = PilotBlock::orthogonal(len).unwrap();
            let trials = 4000;
            let mut acc = 0.0;
            for _ in 0..trials {
                let y = CMatrix::from_fn(2, len, |r, l| g.mul_vec(pilots.column(l))[r] + cn(&mut rng, noise_var));
                let e = estimate_channel(&pilots, &y).unwrap();
                acc += e.0.iter().flatten().zip(g.0.iter().flatten()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
            }
            mse.push(acc / trials as f64);
        }
        // Unit-amplitude orthogonal pilots: per-entry error variance σ²/L.
        for (m, len) in mse.iter().zip([4.0, 16.0, 64.0]) {
            let expect = 4.0 * noise_var / len;
            assert!((m / expect - 1.0).abs() < 0.1, "L = {len}: {m} vs {expect}");
        }
        assert!((mse[0] / mse[1] - 4.0).abs() < 0.6);
        assert!((mse[1] / mse[2] - 4.0).abs() < 0.6);
    }

    #[test]
    fn zf_basics() {
        let y = [c(1.0, 2.0), c(-0.5, 0.25)];
        assert_eq!(zf_equalize(&Matrix2::identity(), y, DEFAULT_MAX_CONDITION).unwrap(), y);
        let two = Matrix2([[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]]);
        let s = zf_equalize(&two, y, DEFAULT_MAX_CONDITION).unwrap();
        assert_eq!(s, [y[0] / 2.0, y[1] / 2.0]);
    }

    #[test]
    fn zf_inverts_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let g = random_matrix2(&mut rng);
            if g.condition_number() > 1e4 {
                continue;
            }
            let s = [cn(&mut rng, 1.0), cn(&mut rng, 1.0)];
            let r = zf_equalize(&g, g.mul_vec(s), DEFAULT_MAX_CONDITION).unwrap();
            assert!((r[0] - s[0]).norm() < 1e-10 && (r[1] - s[1]).norm() < 1e-10);
        }
    }

    #[test]
    fn zf_rejects_near_singular() {
        let g = Matrix2([[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0 + 1e-10, 0.0)]]);
        match zf_equalize(&g, [c(1.0, 0.0), c(1.0, 0.0)], DEFAULT_MAX_CONDITION) {
            Err(Error::SingularChannel { condition }) => assert!(condition > 1e8),
            other => panic!("expected singular channel error, got {other:?}"),
        }
    }

    #[test]
    fn demap_points_and_tie() {
        for (i, &p) in constellation().iter().enumerate() {
            assert_eq!(demap(p), (i, index_to_bits(i)));
        }
        // The four inner points tie at the origin; 0101 is the lowest index.
        assert_eq!(demap(c(0.0, 0.0)).0, 0b0101);
    }

    #[test]
    fn map_then_demap_is_identity() {
        for i in 0..16 {
            let bits = index_to_bits(i);
            let q = map_bits_to_qam(&bits).unwrap()[0];
            assert_eq!(demap(q.point()).1, bits);
        }
    }

    #[test]
    fn theoretical_limits_and_monotonicity() {
        assert!(theoretical_ber_16qam(60.0) < 1e-300);
        assert!((theoretical_ber_16qam(-80.0) - 0.5).abs() < 1e-3);
        let mut prev = 0.5;
        for i in -40..60 {
            let b = theoretical_ber_16qam(i as f64 * 0.5);
            assert!(b < prev);
            prev = b;
        }
        let e = theoretical_ebn0_for_ber(1e-4);
        assert!((theoretical_ber_16qam(e) - 1e-4).abs() < 1e-12);
    }

    // Scalar AWGN Monte Carlo of the same constellation and detector.
    #[test]
    fn theoretical_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let symbols = 10_000_000u64;
        for ebn0_db in [4.0, 8.0] {
            let n0 = qam::MEAN_SYMBOL_ENERGY / (4.0 * 10f64.powf(ebn0_db / 10.0));
            let mut errors = 0u64;
            for _ in 0..symbols {
                let idx = rng.random_range(0..16);
                let r = constellation()[idx] + cn(&mut rng, n0);
                errors += u64::from((demap(r).0 ^ idx).count_ones());
            }
            let rec = BerRecord::from_counts(Some(ebn0_db), symbols * 4, errors).unwrap();
            let th = theoretical_ber_16qam(ebn0_db);
            assert!(rec.consistent_with(th, 3.0), "{ebn0_db} dB: {} vs {th}", rec.ber);
        }
    }

    #[test]
    fn ber_count_cases() {
        let tx: Vec<bool> = (0..1000).map(|i| i % 3 == 0).collect();
        let r = ber_count(&tx, &tx).unwrap();
        assert_eq!((r.bit_errors, r.ber), (0, 0.0));
        let inv: Vec<bool> = tx.iter().map(|b| !b).collect();
        assert_eq!(ber_count(&tx, &inv).unwrap().ber, 1.0);
        assert!(ber_count(&tx, &tx[..10]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rx = tx.clone();
        let mut flipped = std::collections::BTreeSet::new();
        while flipped.len() < 37 {
            flipped.insert(rng.random_range(0..rx.len()));
        }
        for &i in &flipped {
            rx[i] = !rx[i];
        }
        let r = ber_count(&tx, &rx).unwrap();
        assert_eq!(r.bit_errors, 37);
        assert_eq!(r.ber, 0.037);
        assert!(r.wilson_interval_halfwidth > 0.0);
    }

    #[test]
    fn wilson_zero_errors() {
        let (lo, hi) = wilson_interval(0, 1000, Z_95);
        assert!(lo.abs() < 1e-15);
        assert!(hi > 0.0 && hi < 0.01);
    }
}
