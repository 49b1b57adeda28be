//! Bit-packed model encoding.
//!
//! Each count is a fixed-width big-endian field of `ceil(log2(N + 1))` bits.
//! Fields are concatenated gene 0 first and the final byte is zero-padded
//! on its low-order side.

use thiserror::Error;

use crate::cga::ProbabilityVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("packed payload for N={population_size}, length {length} must be {expected} bytes, got {actual}")]
    WrongLength {
        population_size: u64,
        length: usize,
        expected: usize,
        actual: usize,
    },
    #[error("gene {gene} decodes to {count}, above population size {population_size}")]
    CountOutOfRange {
        gene: usize,
        count: u64,
        population_size: u64,
    },
    #[error("population size must be positive")]
    ZeroPopulation,
    #[error("chromosome length must be positive")]
    ZeroLength,
}

/// Bits per count: the number of bits needed to write `N`.
pub fn field_width(population_size: u64) -> u32 {
    (u64::BITS - population_size.leading_zeros()).max(1)
}

/// Size in bytes of a packed vector.
pub fn packed_len(population_size: u64, length: usize) -> usize {
    let bits = length as u128 * field_width(population_size) as u128;
    bits.div_ceil(8) as usize
}

pub fn encode_counts(v: &ProbabilityVector) -> Vec<u8> {
    let width = field_width(v.population_size());
    let mut out = Vec::with_capacity(packed_len(v.population_size(), v.len()));
    // Pending bits live in the low `pending` bits of `acc`.
    let mut acc: u128 = 0;
    let mut pending = 0u32;
    for &count in v.counts() {
        acc = (acc << width) | count as u128;
        pending += width;
        while pending >= 8 {
            pending -= 8;
            out.push((acc >> pending) as u8);
        }
        acc &= (1u128 << pending) - 1;
    }
    if pending > 0 {
        out.push((acc << (8 - pending)) as u8);
    }
    out
}

pub fn decode_counts(
    bytes: &[u8],
    population_size: u64,
    length: usize,
) -> Result<ProbabilityVector, CodecError> {
    if population_size == 0 {
        return Err(CodecError::ZeroPopulation);
    }
    if length == 0 {
        return Err(CodecError::ZeroLength);
    }
    let expected = packed_len(population_size, length);
    if bytes.len() != expected {
        return Err(CodecError::WrongLength {
            population_size,
            length,
            expected,
            actual: bytes.len(),
        });
    }
    let width = field_width(population_size);
    let mask = (1u128 << width) - 1;
    let mut counts = Vec::with_capacity(length);
    let mut acc: u128 = 0;
    let mut available = 0u32;
    let mut input = bytes.iter();
    for gene in 0..length {
        while available < width {
            // length was checked, so the input cannot run dry here
            acc = (acc << 8) | *input.next().expect("payload length checked") as u128;
            available += 8;
        }
        available -= width;
        let count = ((acc >> available) & mask) as u64;
        acc &= (1u128 << available) - 1;
        if count > population_size {
            return Err(CodecError::CountOutOfRange {
                gene,
                count,
                population_size,
            });
        }
        counts.push(count);
    }
    Ok(ProbabilityVector::from_counts(counts, population_size)
        .expect("counts were bounds-checked while decoding"))
}
