//! File transmission demo: bytes in, bytes out over the waveform-level link.
//!
//! Even-indexed bytes go on stream 0 and odd-indexed bytes on stream 1; an
//! odd-length input pads stream 1 with one zero byte, dropped on reassembly.

use crate::campaign::{frame_rng, FRAME_PAIRS};
use crate::config::{CampaignConfig, Fidelity};
use crate::error::Result;
use crate::hardware::PhaseVoltageLut;
use crate::link::Link;
use crate::qam::{bits_to_bytes, bits_to_index, bytes_to_bits, index_to_bits, BITS_PER_SYMBOL};
use crate::receiver::{ber_count, BerRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct LoopbackOutcome {
    pub output: Vec<u8>,
    /// `None` for an empty input.
    pub record: Option<BerRecord>,
}

fn to_indices(bytes: &[u8]) -> Vec<usize> {
    bytes_to_bits(bytes).chunks_exact(BITS_PER_SYMBOL).map(bits_to_index).collect()
}

fn from_indices(indices: &[usize]) -> Vec<u8> {
    let bits: Vec<bool> = indices.iter().flat_map(|&i| index_to_bits(i)).collect();
    bits_to_bytes(&bits)
}

/// Sends `input` through the fidelity-B link at the configured loopback
/// Eb/N0 and coupling setting.
pub fn run_file_loopback(input: &[u8], config: &CampaignConfig, lut: &PhaseVoltageLut) -> Result<LoopbackOutcome> {
    if input.is_empty() {
        return Ok(LoopbackOutcome { output: Vec::new(), record: None });
    }
    let hw = config.hardware_with_coupling(config.loopback.coupling);
    let link = Link::new(config, lut, Fidelity::B, &hw)?;

    let mut s0: Vec<u8> = input.iter().step_by(2).copied().collect();
    let mut s1: Vec<u8> = input.iter().skip(1).step_by(2).copied().collect();
    s1.resize(s0.len(), 0);
    let (i0, i1) = (to_indices(&s0), to_indices(&s1));

    let mut r0 = Vec::with_capacity(i0.len());
    let mut r1 = Vec::with_capacity(i1.len());
    let frame = FRAME_PAIRS as usize;
    for (f, (a, b)) in i0.chunks(frame).zip(i1.chunks(frame)).enumerate() {
        let mut rng = frame_rng(config.seed, 0, f as u64);
        let (x, y) = link.transmit_indices(a, b, config.loopback.ebn0_db, config.sweep.csi, &mut rng)?;
        r0.extend(x);
        r1.extend(y);
    }
    s0 = from_indices(&r0);
    s1 = from_indices(&r1);

    let mut output = Vec::with_capacity(input.len());
    for (a, b) in s0.iter().zip(&s1) {
        output.push(*a);
        output.push(*b);
    }
    output.truncate(input.len());
    let record = ber_count(&bytes_to_bits(input), &bytes_to_bits(&output))?;
    Ok(LoopbackOutcome {
        output,
        record: Some(BerRecord {
            ebn0_db: Some(config.loopback.ebn0_db),
            ..record
        }),
    })
}
