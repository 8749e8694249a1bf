//! Gray-coded 16-QAM on the −1st harmonic.
//!
//! A symbol carries four bits `b0 b1 b2 b3`; `b0 b1` select the in-phase
//! level and `b2 b3` the quadrature level, each through the Gray map
//!
//! | bits | level |
//! |------|-------|
//! | 00   | −3    |
//! | 01   | −1    |
//! | 11   | +1    |
//! | 10   | +3    |
//!
//! Points are scaled by `1/√18` so the outer corners have amplitude 1, the
//! largest the harmonic can reach. The three rings sit at 1/3, √(10/18) and 1.
//! The symbol index is the bit pattern read as a binary number with `b0` as
//! the most significant bit.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulator::QamTarget;

pub const BITS_PER_SYMBOL: usize = 4;
pub const ORDER: usize = 16;

/// Mean symbol energy of the normalized constellation, 10/18.
pub const MEAN_SYMBOL_ENERGY: f64 = 10.0 / 18.0;

fn gray_level(hi: bool, lo: bool) -> f64 {
    match (hi, lo) {
        (false, false) => -3.0,
        (false, true) => -1.0,
        (true, true) => 1.0,
        (true, false) => 3.0,
    }
}

/// Constellation points in symbol-index order.
pub fn constellation() -> &'static [Complex64; ORDER] {
    static POINTS: OnceLock<[Complex64; ORDER]> = OnceLock::new();
    POINTS.get_or_init(|| {
        let scale = 1.0 / 18.0_f64.sqrt();
        let mut pts = [Complex64::new(0.0, 0.0); ORDER];
        for (idx, p) in pts.iter_mut().enumerate() {
            let b = index_to_bits(idx);
            *p = Complex64::new(gray_level(b[0], b[1]) * scale, gray_level(b[2], b[3]) * scale);
        }
        pts
    })
}

pub fn index_to_bits(index: usize) -> [bool; BITS_PER_SYMBOL] {
    debug_assert!(index < ORDER);
    [
        index & 0b1000 != 0,
        index & 0b0100 != 0,
        index & 0b0010 != 0,
        index & 0b0001 != 0,
    ]
}

pub fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// Maps bits to constellation points, four bits per symbol.
pub fn map_bits_to_qam(bits: &[bool]) -> Result<Vec<QamTarget>> {
    Ok(map_bits_to_indices(bits)?
        .into_iter()
        .map(|i| QamTarget::new(constellation()[i]).expect("constellation lies in the unit disk"))
        .collect())
}

/// Maps bits to symbol indices.
pub fn map_bits_to_indices(bits: &[bool]) -> Result<Vec<usize>> {
    if !bits.len().is_multiple_of(BITS_PER_SYMBOL) {
        return Err(Error::BitLength(bits.len(), BITS_PER_SYMBOL));
    }
    Ok(bits.chunks_exact(BITS_PER_SYMBOL).map(bits_to_index).collect())
}

/// Unpacks bytes into bits, most significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
        .collect()
}

/// Packs bits into bytes, most significant bit first. Trailing bits that do
/// not fill a byte are dropped.
pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
        .collect()
}
