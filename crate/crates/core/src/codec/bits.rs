//! Bit-string helpers shared by the frame encoders.
//!
//! All fields are written most-significant bit first.

use bitvec::prelude::*;

use super::CodecError;

/// Owned, MSB-first bit string.
pub type Bits = BitVec<u8, Msb0>;

/// Borrowed view of a [`Bits`] string.
pub type BitsRef = BitSlice<u8, Msb0>;

/// Appends the low `width` bits of `value`, MSB first.
pub fn push_uint(bits: &mut Bits, value: u64, width: usize) {
    debug_assert!(width <= 64);
    for i in (0..width).rev() {
        bits.push((value >> i) & 1 == 1);
    }
}

/// Inverts the bit at `index`.
pub fn flip_bit(bits: &mut BitsRef, index: usize) {
    let v = bits[index];
    bits.set(index, !v);
}

/// Reads `width` bits starting at `start` as an unsigned integer.
pub fn read_uint(bits: &BitsRef, start: usize, width: usize) -> u64 {
    debug_assert!(width <= 64);
    bits[start..start + width]
        .iter()
        .fold(0u64, |acc, b| (acc << 1) | u64::from(*b))
}

/// Packs bits into bytes, padding the final byte with trailing zero bits.
pub fn to_bytes(bits: &BitsRef) -> Vec<u8> {
    let mut owned: Bits = bits.to_bitvec();
    let pad = (8 - owned.len() % 8) % 8;
    owned.extend(std::iter::repeat_n(false, pad));
    owned.into_vec()
}

/// Lowercase hex, MSB first within each byte, zero padded to a byte boundary.
pub fn to_hex(bits: &BitsRef) -> String {
    to_bytes(bits).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses a hex string into a byte-aligned bit string.
pub fn from_hex(hex: &str) -> Result<Bits, CodecError> {
    let hex = hex.trim();
    let hex = hex.strip_prefix("0x").unwrap_or(hex);
    if !hex.len().is_multiple_of(2) {
        return Err(CodecError::BadHex(format!("odd number of digits ({})", hex.len())));
    }
    let bytes = (0..hex.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| CodecError::BadHex(format!("invalid digit pair {:?}", &hex[i..i + 2])))
        })
        .collect::<Result<Vec<u8>, _>>()?;
    Ok(Bits::from_vec(bytes))
}

/// Builds a bit string from a `'0'`/`'1'` text.
pub fn from_bit_str(text: &str) -> Bits {
    text.chars().filter(|c| *c == '0' || *c == '1').map(|c| c == '1').collect()
}

/// Renders a bit string as `'0'`/`'1'` text.
pub fn to_bit_str(bits: &BitsRef) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uint_roundtrip() {
        let mut bits = Bits::new();
        push_uint(&mut bits, 0b101, 3);
        push_uint(&mut bits, 0xABCD, 16);
        assert_eq!(bits.len(), 19);
        assert_eq!(read_uint(&bits, 0, 3), 0b101);
        assert_eq!(read_uint(&bits, 3, 16), 0xABCD);
    }

    #[test]
    fn hex_pads_with_trailing_zeros() {
        let bits = from_bit_str("1010");
        assert_eq!(to_hex(&bits), "a0");
        assert_eq!(to_hex(&from_bit_str("111111111")), "ff80");
    }

    #[test]
    fn hex_parse() {
        let bits = from_hex("0x0aff").unwrap();
        assert_eq!(to_bit_str(&bits), "0000101011111111");
        assert!(matches!(from_hex("abc"), Err(CodecError::BadHex(_))));
        assert!(matches!(from_hex("zz"), Err(CodecError::BadHex(_))));
    }
}
