//! End-to-end 2 × 2 link: symbol tables at either fidelity, the aggregated
//! stream channel, AWGN at a requested Eb/N0, ZF detection and demapping.
//!
//! The transmitted −1st-harmonic pair depends only on the two symbol
//! indices, so both fidelities precompute it once. Fidelity B runs every one
//! of the 256 index pairs through the hardware model; coupling makes the
//! pair, not each stream alone, the unit of distortion.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{build_channel_set, complex_normal, effective_stream_channel};
use crate::config::{CampaignConfig, CsiMode, Fidelity, StreamRelation};
use crate::error::{Error, Result};
use crate::hardware::{distort_reflection, HardwareConfig, PhaseVoltageLut};
use crate::linalg::{CMatrix, Matrix2};
use crate::model::attenuation_from;
use crate::modulator::{harmonic_closed_form, qam_to_tm, QamTarget, TmSymbolParams};
use crate::qam::{constellation, BITS_PER_SYMBOL, MEAN_SYMBOL_ENERGY, ORDER};
use crate::receiver::{demap, estimate_channel, extract_harmonic, PilotBlock, ZfEqualizer};

/// Closed-form modulator settings for every constellation point.
pub fn symbol_params(symbol_period_s: f64) -> Result<Vec<TmSymbolParams>> {
    constellation()
        .iter()
        .map(|&p| qam_to_tm(QamTarget::new(p)?, symbol_period_s))
        .collect()
}

/// Sums the receive antennas of each polarization, turning a 2K × 2 stream
/// channel into the 2 × 2 port channel.
pub fn combine_ports(g: &CMatrix) -> Result<Matrix2> {
    if g.cols() != 2 || g.rows() < 2 || !g.rows().is_multiple_of(2) {
        return Err(Error::Dimension {
            context: "stream channel",
            expected: 4,
            actual: g.rows() * g.cols(),
        });
    }
    let k = g.rows() / 2;
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (p, row) in m.iter_mut().enumerate() {
        for (q, v) in row.iter_mut().enumerate() {
            *v = (0..k).map(|i| g[(p * k + i, q)]).sum();
        }
    }
    Ok(Matrix2(m))
}

#[derive(Debug, Clone)]
enum TxTable {
    Symbol(Vec<Complex64>),
    Pair(Vec<[Complex64; 2]>),
}

/// Errors counted over a batch of symbol pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCount {
    pub bits: u64,
    pub errors: u64,
}

impl ErrorCount {
    pub fn merge(self, other: Self) -> Self {
        Self {
            bits: self.bits + other.bits,
            errors: self.errors + other.errors,
        }
    }
}

/// Prepared link for one fidelity and hardware setting.
#[derive(Debug, Clone)]
pub struct Link {
    fidelity: Fidelity,
    g: Matrix2,
    csi: Matrix2,
    tx: TxTable,
    pilots: PilotBlock,
    pilot_indices: Vec<[usize; 2]>,
    max_condition: f64,
}

impl Link {
    /// Builds the link from the campaign geometry and channel model.
    pub fn new(
        config: &CampaignConfig,
        lut: &PhaseVoltageLut,
        fidelity: Fidelity,
        hw: &HardwareConfig,
    ) -> Result<Self> {
        let set = build_channel_set(&config.geometry, &config.channel)?;
        let e = attenuation_from(&set)?;
        let g = combine_ports(&effective_stream_channel(&set.h2, &e, set.carrier_power_watts)?)?;
        Self::with_channel(g, config, lut, fidelity, hw)
    }

    /// Builds the link around a given 2 × 2 port channel.
    pub fn with_channel(
        g: Matrix2,
        config: &CampaignConfig,
        lut: &PhaseVoltageLut,
        fidelity: Fidelity,
        hw: &HardwareConfig,
    ) -> Result<Self> {
        let params = symbol_params(1.0 / config.symbol_rate_sps)?;
        let (tx, gain) = match fidelity {
            Fidelity::A => (
                TxTable::Symbol(params.iter().map(|p| harmonic_closed_form(p).value).collect()),
                1.0,
            ),
            Fidelity::B => {
                let m = config.sweep.samples_per_symbol;
                let mut pairs = Vec::with_capacity(ORDER * ORDER);
                for p0 in &params {
                    for p1 in &params {
                        let d = distort_reflection(p0, p1, lut, hw, m)?;
                        pairs.push([extract_harmonic(&d.waveforms[0]), extract_harmonic(&d.waveforms[1])]);
                    }
                }
                (TxTable::Pair(pairs), hw.base_reflection_amplitude)
            }
        };
        let csi = Matrix2([
            [g.0[0][0] * gain, g.0[0][1] * gain],
            [g.0[1][0] * gain, g.0[1][1] * gain],
        ]);
        let pilots = PilotBlock::orthogonal(config.sweep.pilot_length)?;
        let pilot_indices = (0..pilots.len())
            .map(|l| {
                let col = pilots.column(l);
                [nearest_index(col[0]), nearest_index(col[1])]
            })
            .collect();
        Ok(Self {
            fidelity,
            g,
            csi,
            tx,
            pilots,
            pilot_indices,
            max_condition: config.sweep.max_condition,
        })
    }

    pub fn fidelity(&self) -> Fidelity {
        self.fidelity
    }

    /// True port channel.
    pub fn channel(&self) -> &Matrix2 {
        &self.g
    }

    /// Channel the detector is given under perfect CSI: the port channel
    /// times the nominal reflection amplitude.
    pub fn perfect_csi(&self) -> &Matrix2 {
        &self.csi
    }

    /// −1st-harmonic pair radiated for symbol indices `(i0, i1)`.
    pub fn transmitted(&self, i0: usize, i1: usize) -> [Complex64; 2] {
        match &self.tx {
            TxTable::Symbol(t) => [t[i0], t[i1]],
            TxTable::Pair(t) => t[i0 * ORDER + i1],
        }
    }

    /// Per-port noise power for a requested Eb/N0: the port's row energy of
    /// the nominal channel times the mean symbol energy over the symbol SNR.
    pub fn noise_powers(&self, ebn0_db: f64) -> [f64; 2] {
        let esn0 = BITS_PER_SYMBOL as f64 * 10f64.powf(ebn0_db / 10.0);
        let m = &self.csi.0;
        [0, 1].map(|p| (m[p][0].norm_sqr() + m[p][1].norm_sqr()) * MEAN_SYMBOL_ENERGY / esn0)
    }

    fn receive(&self, i0: usize, i1: usize, noise: [f64; 2], rng: &mut impl Rng) -> [Complex64; 2] {
        let y = self.g.mul_vec(self.transmitted(i0, i1));
        [y[0] + complex_normal(rng, noise[0]), y[1] + complex_normal(rng, noise[1])]
    }

    /// Detector for one frame: the perfect-CSI inverse, or an inverse of the
    /// channel estimated from a fresh pilot block.
    fn equalizer(&self, csi: CsiMode, noise: [f64; 2], rng: &mut impl Rng) -> Result<ZfEqualizer> {
        let g_hat = match csi {
            CsiMode::Perfect => self.csi,
            CsiMode::Pilot => {
                let l = self.pilots.len();
                let mut y = CMatrix::zeros(2, l);
                for (slot, [i0, i1]) in self.pilot_indices.iter().enumerate() {
                    let r = self.receive(*i0, *i1, noise, rng);
                    y[(0, slot)] = r[0];
                    y[(1, slot)] = r[1];
                }
                estimate_channel(&self.pilots, &y)?
            }
        };
        ZfEqualizer::new(&g_hat, self.max_condition)
    }

    /// Sends `pairs` random symbol pairs as one frame and counts bit errors.
    pub fn run_frame(
        &self,
        ebn0_db: f64,
        pairs: u64,
        relation: StreamRelation,
        csi: CsiMode,
        rng: &mut impl Rng,
    ) -> Result<ErrorCount> {
        let noise = self.noise_powers(ebn0_db);
        let zf = self.equalizer(csi, noise, rng)?;
        let mut errors = 0u64;
        for _ in 0..pairs {
            let i0 = rng.random_range(0..ORDER);
            let i1 = match relation {
                StreamRelation::Independent => rng.random_range(0..ORDER),
                StreamRelation::Identical => i0,
            };
            let s = zf.equalize(self.receive(i0, i1, noise, rng));
            errors += u64::from((demap(s[0]).0 ^ i0).count_ones() + (demap(s[1]).0 ^ i1).count_ones());
        }
        Ok(ErrorCount {
            bits: pairs * 2 * BITS_PER_SYMBOL as u64,
            errors,
        })
    }

    /// Sends given symbol index streams and returns the detected indices.
    pub fn transmit_indices(
        &self,
        stream0: &[usize],
        stream1: &[usize],
        ebn0_db: f64,
        csi: CsiMode,
        rng: &mut impl Rng,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        if stream0.len() != stream1.len() {
            return Err(Error::LengthMismatch(stream0.len(), stream1.len()));
        }
        let noise = self.noise_powers(ebn0_db);
        let zf = self.equalizer(csi, noise, rng)?;
        let mut out0 = Vec::with_capacity(stream0.len());
        let mut out1 = Vec::with_capacity(stream1.len());
        for (&i0, &i1) in stream0.iter().zip(stream1) {
            let s = zf.equalize(self.receive(i0, i1, noise, rng));
            out0.push(demap(s[0]).0);
            out1.push(demap(s[1]).0);
        }
        Ok((out0, out1))
    }
}

fn nearest_index(p: Complex64) -> usize {
    demap(p).0
}
