//! Frame check sequence: CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF,
//! no reflection, no final xor), computed bit-serially so that frames which
//! are not byte aligned are covered exactly.

use super::bits::BitsRef;

const POLY: u16 = 0x1021;
const INIT: u16 = 0xFFFF;

/// CRC-16/CCITT-FALSE over an arbitrary-length bit string.
///
/// An empty input yields the register's initial value `0xFFFF`, which is
/// what the byte-oriented reference algorithm returns for zero bytes.
pub fn compute_fcs(bits: &BitsRef) -> u16 {
    bits.iter().fold(INIT, |crc, bit| {
        let feedback = ((crc >> 15) & 1 == 1) ^ *bit;
        let shifted = crc << 1;
        if feedback {
            shifted ^ POLY
        } else {
            shifted
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bits::Bits;

    #[test]
    fn check_value() {
        // Published check value for "123456789".
        let bits = Bits::from_vec(b"123456789".to_vec());
        assert_eq!(compute_fcs(&bits), 0x29B1);
    }

    #[test]
    fn empty_is_init() {
        assert_eq!(compute_fcs(&Bits::new()), 0xFFFF);
    }

    #[test]
    fn deterministic() {
        let bits = Bits::from_vec(vec![0xDE, 0xAD, 0xBE, 0xEF]);
        assert_eq!(compute_fcs(&bits), compute_fcs(&bits));
    }
}
