//! Downlink error-correcting code.
//!
//! The payload is zero padded to 64 bits and split into four 16-bit blocks.
//! Each block is protected by an extended Hamming (22,16) SECDED code: five
//! Hamming parity bits plus one overall parity bit, stored MSB first in an
//! 8-bit slot whose two low bits are reserved and transmitted as zero. The 32
//! check bits therefore correct one bit error per block (in data or check
//! bits) and detect any two bit errors within a block.

use super::bits::{push_uint, read_uint, Bits, BitsRef};

pub const ECC_BITS: usize = 32;
pub const BLOCK_DATA_BITS: usize = 16;
pub const BLOCKS: usize = 4;

const CODE_LEN: usize = 21;
const PARITY_POSITIONS: [usize; 5] = [1, 2, 4, 8, 16];

/// Outcome of decoding one protected payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corrected {
    pub payload: Bits,
    pub ecc: Bits,
    pub corrected_bits: usize,
}

/// A block carried more errors than the code can correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Uncorrectable {
    pub block: usize,
}

fn data_positions() -> impl Iterator<Item = usize> {
    (1..=CODE_LEN).filter(|p| !p.is_power_of_two())
}

/// Lays a 16-bit data word out on Hamming positions 1..=21 (index 0 unused).
fn spread(data: u16) -> [bool; CODE_LEN + 1] {
    let mut word = [false; CODE_LEN + 1];
    for (i, pos) in data_positions().enumerate() {
        word[pos] = (data >> (BLOCK_DATA_BITS - 1 - i)) & 1 == 1;
    }
    word
}

fn gather(word: &[bool; CODE_LEN + 1]) -> u16 {
    data_positions().fold(0u16, |acc, pos| (acc << 1) | u16::from(word[pos]))
}

fn syndrome(word: &[bool; CODE_LEN + 1]) -> usize {
    (1..=CODE_LEN).filter(|&p| word[p]).fold(0, |acc, p| acc ^ p)
}

fn encode_block(data: u16) -> u8 {
    let mut word = spread(data);
    let s = syndrome(&word);
    for (i, &p) in PARITY_POSITIONS.iter().enumerate() {
        word[p] = (s >> i) & 1 == 1;
    }
    let overall = word[1..].iter().filter(|b| **b).count() % 2 == 1;
    let mut check = 0u8;
    for &p in &PARITY_POSITIONS {
        check = (check << 1) | u8::from(word[p]);
    }
    ((check << 1) | u8::from(overall)) << 2
}

fn decode_block(data: u16, check: u8) -> Result<(u16, u8, usize), Uncorrectable> {
    let mut fixes = usize::from(check & 0b11 != 0);
    let mut word = spread(data);
    for (i, &p) in PARITY_POSITIONS.iter().enumerate() {
        word[p] = (check >> (7 - i)) & 1 == 1;
    }
    let overall_bit = (check >> 2) & 1 == 1;
    let parity_ok = (word[1..].iter().filter(|b| **b).count() % 2 == 1) == overall_bit;
    let s = syndrome(&word);
    match (s, parity_ok) {
        (0, true) => {}
        // Single error in the overall parity bit itself.
        (0, false) => fixes += 1,
        (s, false) if s <= CODE_LEN => {
            word[s] = !word[s];
            fixes += 1;
        }
        _ => return Err(Uncorrectable { block: 0 }),
    }
    let data = gather(&word);
    Ok((data, encode_block(data), fixes))
}

fn padded_blocks(payload: &BitsRef) -> [u16; BLOCKS] {
    debug_assert!(payload.len() <= BLOCKS * BLOCK_DATA_BITS);
    let mut padded = payload.to_bitvec();
    padded.resize(BLOCKS * BLOCK_DATA_BITS, false);
    std::array::from_fn(|k| read_uint(&padded, k * BLOCK_DATA_BITS, BLOCK_DATA_BITS) as u16)
}

/// Computes the 32 check bits for a payload of at most 64 bits.
pub fn encode_ecc(payload: &BitsRef) -> Bits {
    let mut ecc = Bits::with_capacity(ECC_BITS);
    for block in padded_blocks(payload) {
        push_uint(&mut ecc, u64::from(encode_block(block)), 8);
    }
    ecc
}

/// Corrects `payload` against the received check bits.
///
/// Errors that land in the zero padding are invisible because the padding is
/// never transmitted.
pub fn correct(payload: &BitsRef, ecc: &BitsRef) -> Result<Corrected, Uncorrectable> {
    debug_assert_eq!(ecc.len(), ECC_BITS);
    let blocks = padded_blocks(payload);
    let mut fixed = Bits::with_capacity(BLOCKS * BLOCK_DATA_BITS);
    let mut new_ecc = Bits::with_capacity(ECC_BITS);
    let mut corrected_bits = 0;
    for (k, block) in blocks.into_iter().enumerate() {
        let check = read_uint(ecc, k * 8, 8) as u8;
        let (data, check, fixes) =
            decode_block(block, check).map_err(|_| Uncorrectable { block: k })?;
        push_uint(&mut fixed, u64::from(data), BLOCK_DATA_BITS);
        push_uint(&mut new_ecc, u64::from(check), 8);
        corrected_bits += fixes;
    }
    fixed.truncate(payload.len());
    Ok(Corrected {
        payload: fixed,
        ecc: new_ecc,
        corrected_bits,
    })
}
