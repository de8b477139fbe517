//! Deterministic per-column bit streams and extraction of the (R, Z, X)
//! register fields.
//!
//! Each (object, column) pair owns an effectively unbounded bit stream:
//! 512-bit blocks of SHA-512 over `column byte || block counter || object`.
//! Column streams of the same object behave independently, and the same
//! pair always reproduces the same bits, which is what makes inserts
//! idempotent and merges exact.

use crate::error::{Error, Result};
use sha2::{Digest, Sha512};

/// Scheme id recorded in sketch files: SHA-512 in block-counter mode.
pub const SCHEME_SHA512: u8 = 0x01;

/// Bits available per (object, column) stream. A register update needs a
/// 1-bit within this budget; the miss probability is 2^-(capacity - prefix).
pub const STREAM_CAPACITY_BITS: usize = 4096;

const BLOCK_BITS: usize = 512;

/// The three fields read off the head of a column stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldTriple {
    /// Row index R in 1..=2^r0, from the first r0 bits (bit r weighs 2^(r-1)).
    pub row: u32,
    /// The next z0 bits as an integer, most significant first.
    pub mantissa: u32,
    /// X: 1-based position of the first 1-bit after the prefix.
    pub rank: u32,
}

fn block(object: &[u8], column: u16, index: u32) -> [u8; 64] {
    debug_assert!((1..=256).contains(&column));
    let mut hasher = Sha512::new();
    hasher.update([(column - 1) as u8]);
    hasher.update(index.to_le_bytes());
    hasher.update(object);
    hasher.finalize().into()
}

/// Deterministic bit stream for (object, column), packed MSB-first,
/// `need_bits` bits long (rounded up to whole bytes).
pub fn bitstream(object: &[u8], column: u16, need_bits: usize) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(need_bits.div_ceil(8));
    let mut index = 0u32;
    while bytes.len() * 8 < need_bits {
        bytes.extend_from_slice(&block(object, column, index));
        index += 1;
    }
    bytes.truncate(need_bits.div_ceil(8));
    bytes
}

#[inline]
fn bit_at(bytes: &[u8], idx: usize) -> u32 {
    ((bytes[idx / 8] >> (7 - idx % 8)) & 1) as u32
}

/// Reads (R, Z, X) from a bit sequence laid out as r0 row bits, z0 mantissa
/// bits, then a run of zeros terminated by the 1-bit that defines X.
pub fn extract_fields(bits: &[u8], nbits: usize, r0: u8, z0: u8) -> Result<FieldTriple> {
    debug_assert!(bits.len() * 8 >= nbits);
    let prefix = r0 as usize + z0 as usize;
    if nbits < prefix + 1 {
        return Err(Error::Capacity { capacity: nbits });
    }
    let mut row = 1u32;
    for r in 0..r0 as usize {
        row += bit_at(bits, r) << r;
    }
    let mut mantissa = 0u32;
    for j in 0..z0 as usize {
        mantissa = (mantissa << 1) | bit_at(bits, r0 as usize + j);
    }
    for idx in prefix..nbits {
        if bit_at(bits, idx) == 1 {
            return Ok(FieldTriple { row, mantissa, rank: (idx - prefix + 1) as u32 });
        }
    }
    Err(Error::Capacity { capacity: nbits })
}

/// Fused stream generation and extraction; produces blocks lazily since the
/// 1-bit nearly always shows up in the first one.
pub(crate) fn extract_for(object: &[u8], column: u16, r0: u8, z0: u8) -> Result<FieldTriple> {
    let prefix = r0 as usize + z0 as usize;
    let mut bytes: Vec<u8> = block(object, column, 0).to_vec();
    let mut row = 1u32;
    for r in 0..r0 as usize {
        row += bit_at(&bytes, r) << r;
    }
    let mut mantissa = 0u32;
    for j in 0..z0 as usize {
        mantissa = (mantissa << 1) | bit_at(&bytes, r0 as usize + j);
    }
    let mut idx = prefix;
    loop {
        let have = bytes.len() * 8;
        while idx < have {
            if bit_at(&bytes, idx) == 1 {
                return Ok(FieldTriple { row, mantissa, rank: (idx - prefix + 1) as u32 });
            }
            idx += 1;
        }
        if have >= STREAM_CAPACITY_BITS {
            return Err(Error::Capacity { capacity: STREAM_CAPACITY_BITS });
        }
        bytes.extend_from_slice(&block(object, column, (have / BLOCK_BITS) as u32));
    }
}

/// As [`extract_fields`] on the live stream, but also reports the
/// infinite-precision register summary: rank - log2(1 + 0.m) with the
/// mantissa extended past z0 by fresh stream bits (a reserved block index
/// range, disjoint from the bits that produced the rank), enough of them
/// to exhaust f64. This is the instrumentation hook for checking the
/// one-sided rounding bias of the finite mantissa.
pub fn extract_extended(object: &[u8], column: u16, r0: u8, z0: u8) -> Result<(FieldTriple, f64)> {
    let triple = extract_for(object, column, r0, z0)?;
    let extension = block(object, column, u32::MAX);
    let mut frac = triple.mantissa as f64 / (1u64 << z0) as f64;
    let mut weight = 0.5f64 / (1u64 << z0) as f64;
    for j in 0..60usize {
        if bit_at(&extension, j) == 1 {
            frac += weight;
        }
        weight *= 0.5;
    }
    let y_bar = triple.rank as f64 - (1.0 + frac).log2();
    Ok((triple, y_bar))
}
